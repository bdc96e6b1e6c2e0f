use std::collections::BTreeMap;

use proptest::prelude::*;
use qcomb_cli::format::OperatorFile;
use qcomb_core::{wire, LabeledOperator, C64};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
    ]
}

proptest! {
    #[test]
    fn canonical_form_roundtrips_bit_for_bit(values in prop::collection::vec((finite(), finite()), 9)) {
        let entries: Vec<C64> = values.iter().map(|(a, b)| C64::new(*a, *b)).collect();
        let op = LabeledOperator::from_row_major(vec![wire("x", 3)], &entries).unwrap();
        let text = OperatorFile::from_operator(&op, BTreeMap::new()).to_canonical_string().unwrap();
        let parsed = OperatorFile::parse(&text).unwrap();
        prop_assert_eq!(parsed.to_canonical_string().unwrap(), text);
        let back = parsed.to_operator().unwrap();
        for (x, y) in back.to_row_major().iter().zip(&entries) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
