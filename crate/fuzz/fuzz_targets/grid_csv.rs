#![no_main]

use libfuzzer_sys::fuzz_target;
use nonharmonic::io::{read_grid_function_csv, write_grid_function_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = read_grid_function_csv(data) {
        let mut buf = Vec::new();
        write_grid_function_csv(&mut buf, &f).unwrap();
        assert_eq!(read_grid_function_csv(buf.as_slice()).unwrap(), f);
    }
});
