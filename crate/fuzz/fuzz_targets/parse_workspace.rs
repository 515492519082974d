#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        let _ = dayext_cli::workspace::Workspace::parse(
            &[("fuzz.ws".to_string(), src.to_string())],
            &dayext::Limits::default(),
        );
    }
});
