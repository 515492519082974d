#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        if let Ok(formula) = dayext_cli::formula::parse_formula(src) {
            // A parsed formula must survive the canonical printer.
            let printed = formula.to_string();
            let back = dayext_cli::formula::parse_formula(&printed)
                .expect("canonical output reparses");
            assert_eq!(back, formula);
        }
    }
});
