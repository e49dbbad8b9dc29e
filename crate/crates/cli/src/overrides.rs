use serde_json::{Map, Value};

/// Parse `a.b.c=value`. The value is read as JSON when it parses, otherwise
/// taken as a bare string, so `hints.provider=oracle` and `ppo.gamma=0.9`
/// both work.
pub fn parse(spec: &str) -> Result<(Vec<String>, Value), String> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form key=value"))?;
    let keys: Vec<String> = path.trim().split('.').map(str::to_string).collect();
    if keys.iter().any(String::is_empty) {
        return Err(format!("override `{spec}` has an empty key segment"));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((keys, value))
}

/// Set `keys` inside `root`, creating intermediate objects.
pub fn apply(root: &mut Value, keys: &[String], value: Value) -> Result<(), String> {
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        let Value::Object(map) = node else {
            return Err(format!("`{}` is not an object", keys[..i].join(".")));
        };
        if i + 1 == keys.len() {
            map.insert(key.clone(), value);
            return Ok(());
        }
        node = map.entry(key.clone()).or_insert(Value::Null);
    }
    Ok(())
}

pub fn apply_all(root: &mut Value, specs: &[String]) -> Result<(), String> {
    for s in specs {
        let (keys, value) = parse(s)?;
        apply(root, &keys, value)?;
    }
    Ok(())
}
