#![no_main]

use libfuzzer_sys::fuzz_target;
use nonharmonic::io::read_symbol_samples;

fuzz_target!(|data: &[u8]| {
    if let Ok((nx, lo, hi, values)) = read_symbol_samples(data) {
        assert!(lo <= hi);
        assert_eq!(values.len() as u128, nx as u128 * (hi - lo + 1) as u128);
        assert!(values.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }
});
