//! Run the whole scenario catalog and print a verdict line per scenario,
//! expanding any failed expectations.
//!
//! ```sh
//! cargo run --release --example scenario_catalog
//! ```

use eigenlab::scenarios;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for info in scenarios::list() {
        println!("{:>4}  {}", info.id, info.description);
    }
    println!();

    let reports = scenarios::run_all()?;
    let mut all_ok = true;
    for rep in &reports {
        println!(
            "{:>4}  {}  ({} expectations, {} ms)",
            rep.id,
            if rep.passed { "pass" } else { "FAIL" },
            rep.expectations.len(),
            rep.runtime_ms
        );
        for x in rep.expectations.iter().filter(|x| !x.pass) {
            all_ok = false;
            println!("      failed: {}", x.quantity);
            println!("        target   {}", x.target);
            println!("        measured {}", x.measured);
            println!("        {}", x.provenance);
        }
    }

    if all_ok {
        println!("\nall scenarios passed");
        Ok(())
    } else {
        Err("some scenario expectations failed".into())
    }
}
