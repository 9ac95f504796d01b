//! The native interchange format: a single JSON object with fields
//! `name`, `nodes` (array of `{name, states}`), `edges` (array of
//! `[parent, child]` pairs) and `cpts` (map from node to its flat CPT
//! value array, row-major over parents in edge order with the node's
//! states varying fastest).
//!
//! Values round-trip losslessly: the writer emits the shortest decimal
//! rendering that parses back to the identical `f64`.

use pbn_core::bayesnet::BayesianNetwork;

use crate::document::{FormatError, NetworkDocument, Parsed};

/// Parses a native-format document into a validated network.
pub fn parse_native(text: &str) -> Result<Parsed, FormatError> {
    let doc: NetworkDocument =
        serde_json::from_str(text).map_err(|e| FormatError::Schema {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
    doc.build()
}

/// Writes a network as a native-format document.
pub fn write_native(name: &str, net: &BayesianNetwork) -> String {
    let doc = NetworkDocument::from_network(name, net);
    let mut out = serde_json::to_string_pretty(&doc).expect("document serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pbn_core::bayesnet::student_network;

    #[test]
    fn student_round_trip_is_bit_identical() {
        let net = student_network();
        let text = write_native("Student", &net);
        let parsed = parse_native(&text).unwrap();
        assert_eq!(parsed.name, "Student");
        for v in net.variables() {
            assert_eq!(
                net.cpt(v.name()).unwrap().values(),
                parsed.network.cpt(v.name()).unwrap().values()
            );
        }
        assert_eq!(write_native("Student", &parsed.network), text);
    }

    #[test]
    fn missing_cpt_is_an_error_naming_the_node() {
        let net = student_network();
        let mut doc: serde_json::Value =
            serde_json::from_str(&write_native("Student", &net)).unwrap();
        doc["cpts"].as_object_mut().unwrap().remove("G");
        let err = parse_native(&doc.to_string()).unwrap_err();
        assert!(matches!(err, FormatError::Document { ref path, .. } if path == "cpts.G"));
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = parse_native("{\"name\": ").unwrap_err();
        assert!(matches!(err, FormatError::Schema { .. }), "{err}");
    }

    #[test]
    fn unknown_field_is_a_schema_error() {
        let net = student_network();
        let mut doc: serde_json::Value =
            serde_json::from_str(&write_native("Student", &net)).unwrap();
        doc["surprise"] = serde_json::json!(1);
        let err = parse_native(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("surprise"), "{err}");
    }

    #[test]
    fn elvira_native_elvira_round_trip_agrees() {
        let net = student_network();
        let elv = crate::elvira::write_elvira("Student", &net);
        let first = crate::elvira::parse_elvira(&elv).unwrap();
        let json = write_native(&first.name, &first.network);
        let second = parse_native(&json).unwrap();
        let back = crate::elvira::write_elvira(&second.name, &second.network);
        let third = crate::elvira::parse_elvira(&back).unwrap();
        let a = net.joint_distribution().unwrap();
        let b = third.network.joint_distribution().unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}
