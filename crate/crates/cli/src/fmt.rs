use std::path::Path;

use qmc_core::logic::serialize_assertions;
use qmc_core::qts::serialize_model;

use crate::input::{load_assertions, load_model, read};
use crate::FmtArgs;

fn canonical(path: &Path) -> anyhow::Result<String> {
    if path.extension().is_some_and(|e| e == "ctql") {
        Ok(serialize_assertions(&load_assertions(path)?))
    } else {
        Ok(serialize_model(&load_model(path)?))
    }
}

pub fn run(args: &FmtArgs) -> anyhow::Result<u8> {
    let mut dirty = false;
    for path in &args.files {
        let text = canonical(path)?;
        if args.check {
            if read(path)? != text {
                eprintln!("{} is not canonical", path.display());
                dirty = true;
            }
        } else if args.write {
            std::fs::write(path, &text)?;
        } else {
            print!("{text}");
        }
    }
    Ok(u8::from(dirty))
}
