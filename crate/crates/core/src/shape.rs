//! Structural pre-check for JSON inputs: record positions must hold objects.
//! Derived deserializers would otherwise also accept arrays for records.

use serde_json::Value;

pub(crate) enum Expect {
    Object,
    NotArray,
}

/// Checks `doc` against `rules`: dotted paths where `*` matches every array
/// element or object member. Returns the offending path on failure.
pub(crate) fn check(doc: &Value, rules: &[(&str, Expect)]) -> Result<(), (String, &'static str)> {
    for (path, expect) in rules {
        let segments: Vec<&str> = path.split('.').filter(|s| !s.is_empty()).collect();
        walk(doc, &segments, String::new(), expect)?;
    }
    Ok(())
}

fn walk(value: &Value, rest: &[&str], at: String, expect: &Expect) -> Result<(), (String, &'static str)> {
    let Some((head, tail)) = rest.split_first() else {
        return match (expect, value) {
            (Expect::Object, Value::Object(_)) => Ok(()),
            (Expect::Object, _) => Err((display(at), "expected a JSON object")),
            (Expect::NotArray, Value::Array(_)) => Err((display(at), "an array is not allowed here")),
            (Expect::NotArray, _) => Ok(()),
        };
    };
    let join = |key: &str| if at.is_empty() { key.to_string() } else { format!("{at}.{key}") };
    match (*head, value) {
        ("*", Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                walk(item, tail, join(&i.to_string()), expect)?;
            }
        }
        ("*", Value::Object(members)) => {
            for (k, v) in members {
                walk(v, tail, join(k), expect)?;
            }
        }
        (key, Value::Object(members)) => {
            if let Some(v) = members.get(key) {
                walk(v, tail, join(key), expect)?;
            }
        }
        // type mismatches further up are reported by the deserializer
        _ => {}
    }
    Ok(())
}

fn display(at: String) -> String {
    if at.is_empty() {
        "document root".into()
    } else {
        at
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const RULES: &[(&str, Expect)] = &[("", Expect::Object), ("items.*", Expect::Object), ("items.*.v", Expect::NotArray)];

    #[test]
    fn accepts_objects() {
        assert!(check(&json!({"items": [{"v": 1}, {}]}), RULES).is_ok());
        assert!(check(&json!({}), RULES).is_ok());
    }

    #[test]
    fn names_the_offending_path() {
        assert_eq!(check(&json!([]), RULES).unwrap_err().0, "document root");
        assert_eq!(check(&json!({"items": [{}, []]}), RULES).unwrap_err().0, "items.1");
        assert_eq!(check(&json!({"items": [{"v": [1]}]}), RULES).unwrap_err().0, "items.0.v");
    }
}
