#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = ferrolayer::csvio::parse_table(text) {
            for row in &table.rows {
                assert_eq!(row.len(), table.columns.len());
            }
            let _ = table.to_text();
        }
    }
});
