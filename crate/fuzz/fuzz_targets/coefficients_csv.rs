#![no_main]

use libfuzzer_sys::fuzz_target;
use nonharmonic::io::{read_coefficients_csv, write_coefficients_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = read_coefficients_csv(data) {
        let mut buf = Vec::new();
        write_coefficients_csv(&mut buf, &a).unwrap();
        let b = read_coefficients_csv(buf.as_slice()).unwrap();
        assert_eq!(b.values(), a.values());
        assert_eq!(b.window(), a.window());
    }
});
