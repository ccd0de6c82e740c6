#![no_main]

use iago::bench::BenchConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Accepted documents must survive a round trip through the resolved form.
    if let Ok(config) = BenchConfig::from_toml_str(text) {
        let again = BenchConfig::from_toml_str(&config.to_toml_string()).expect("resolved config reparses");
        assert_eq!(config, again);
        let _ = config.checkpoints();
        let _ = config.quartile_checkpoints();
    }
});
