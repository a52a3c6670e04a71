#![no_main]

use libfuzzer_sys::fuzz_target;
use nonharmonic::io::{read_weight_table_csv, write_weight_table_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = read_weight_table_csv(data) {
        let mut buf = Vec::new();
        write_weight_table_csv(&mut buf, &table).unwrap();
        assert_eq!(read_weight_table_csv(buf.as_slice()).unwrap(), table);
    }
});
