#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(modes) = flowbench::kraichnan::parse_modes(text) {
        // Anything accepted must survive a write/read cycle unchanged.
        let again = flowbench::kraichnan::parse_modes(&modes.to_text()).expect("re-parse");
        assert_eq!(again.k1(), modes.k1());
        assert_eq!(again.k2(), modes.k2());
        assert_eq!(again.phi(), modes.phi());
    }
});
