use serde_json::{json, Map, Value};

use super::{
    BoundingBox, FixtureError, GaugeFixture, GroundTruth, Keypoint, KeypointClass, OcrItem,
    Point2, ScaleKind, DEFAULT_CROP_SIZE, SCHEMA_VERSION,
};

/// Parses and validates a fixture document.
///
/// Unknown fields are ignored. `crop_size`, `ocr` and `ground_truth` are
/// optional; OCR confidence defaults to 1.0.
pub fn parse_fixture(bytes: &[u8]) -> Result<GaugeFixture, FixtureError> {
    let doc: Value =
        serde_json::from_slice(bytes).map_err(|e| FixtureError::Syntax(e.to_string()))?;
    let root = doc
        .as_object()
        .ok_or_else(|| FixtureError::schema("$", "top level must be an object"))?;

    match root.get("schema") {
        None => return Err(FixtureError::schema("schema", "missing required field")),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(_) => {
            return Err(FixtureError::schema(
                "schema",
                format!("unsupported schema version (expected {SCHEMA_VERSION})"),
            ))
        }
    }

    let crop_size = match root.get("crop_size") {
        None | Some(Value::Null) => DEFAULT_CROP_SIZE,
        Some(v) => parse_crop_size(v)?,
    };

    let keypoints = required_array(root, "keypoints")?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_keypoint(v, &format!("keypoints[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    let needle_points = required_array(root, "needle_points")?
        .iter()
        .enumerate()
        .map(|(i, v)| parse_pair(v, &format!("needle_points[{i}]")).map(|(x, y)| Point2::new(x, y)))
        .collect::<Result<Vec<_>, _>>()?;

    let ocr_items = match root.get("ocr") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| parse_ocr_item(v, &format!("ocr[{i}]")))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(FixtureError::schema("ocr", "expected an array")),
    };

    let ground_truth = match root.get("ground_truth") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_ground_truth(v)?),
    };

    let fixture = GaugeFixture {
        crop_size,
        keypoints,
        needle_points,
        ocr_items,
        ground_truth,
    };
    fixture.validate()?;
    Ok(fixture)
}

/// Serializes a fixture as pretty-printed JSON with a fixed key order.
pub fn serialize_fixture(fixture: &GaugeFixture) -> Vec<u8> {
    let keypoints: Vec<Value> = fixture
        .keypoints
        .iter()
        .map(|k| {
            let mut m = Map::new();
            m.insert("x".into(), json!(k.position.x));
            m.insert("y".into(), json!(k.position.y));
            m.insert("class".into(), json!(k.class.as_str()));
            Value::Object(m)
        })
        .collect();
    let needle: Vec<Value> = fixture
        .needle_points
        .iter()
        .map(|p| json!([p.x, p.y]))
        .collect();
    let ocr: Vec<Value> = fixture
        .ocr_items
        .iter()
        .map(|o| {
            let mut m = Map::new();
            m.insert(
                "box".into(),
                json!([o.bbox.min.x, o.bbox.min.y, o.bbox.width, o.bbox.height]),
            );
            m.insert("text".into(), json!(o.text));
            m.insert("confidence".into(), json!(o.confidence));
            Value::Object(m)
        })
        .collect();

    let mut root = Map::new();
    root.insert("schema".into(), json!(SCHEMA_VERSION));
    root.insert(
        "crop_size".into(),
        json!([fixture.crop_size.0, fixture.crop_size.1]),
    );
    root.insert("keypoints".into(), Value::Array(keypoints));
    root.insert("needle_points".into(), Value::Array(needle));
    root.insert("ocr".into(), Value::Array(ocr));
    if let Some(gt) = &fixture.ground_truth {
        let mut m = Map::new();
        m.insert("reading".into(), json!(gt.reading));
        m.insert("range_min".into(), json!(gt.range_min));
        m.insert("range_max".into(), json!(gt.range_max));
        m.insert("unit".into(), json!(gt.unit));
        if let Some(scale) = gt.scale {
            m.insert("scale".into(), json!(scale.as_str()));
        }
        root.insert("ground_truth".into(), Value::Object(m));
    }
    let mut out = serde_json::to_vec_pretty(&Value::Object(root))
        .expect("fixture values are always serializable");
    out.push(b'\n');
    out
}

fn required_array<'a>(root: &'a Map<String, Value>, key: &str) -> Result<&'a [Value], FixtureError> {
    match root.get(key) {
        None => Err(FixtureError::schema(key, "missing required field")),
        Some(Value::Array(items)) => Ok(items),
        Some(_) => Err(FixtureError::schema(key, "expected an array")),
    }
}

fn number(v: Option<&Value>, path: &str) -> Result<f64, FixtureError> {
    match v {
        None => Err(FixtureError::schema(path, "missing required field")),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| FixtureError::schema(path, "expected a finite number")),
    }
}

fn parse_crop_size(v: &Value) -> Result<(u32, u32), FixtureError> {
    let dims = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| FixtureError::schema("crop_size", "expected [width, height]"))?;
    let mut out = [0u32; 2];
    for (slot, d) in out.iter_mut().zip(dims) {
        *slot = d
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| FixtureError::schema("crop_size", "dimensions must be positive integers"))?;
    }
    Ok((out[0], out[1]))
}

fn parse_pair(v: &Value, path: &str) -> Result<(f64, f64), FixtureError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| FixtureError::schema(path, "expected [x, y]"))?;
    Ok((number(arr.first(), path)?, number(arr.get(1), path)?))
}

fn parse_keypoint(v: &Value, path: &str) -> Result<Keypoint, FixtureError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FixtureError::schema(path, "expected an object"))?;
    let x = number(obj.get("x"), &format!("{path}.x"))?;
    let y = number(obj.get("y"), &format!("{path}.y"))?;
    let class_path = format!("{path}.class");
    let class = obj
        .get("class")
        .ok_or_else(|| FixtureError::schema(&class_path, "missing required field"))?
        .as_str()
        .and_then(KeypointClass::parse)
        .ok_or_else(|| {
            FixtureError::schema(&class_path, "expected one of start, intermediate, end")
        })?;
    Ok(Keypoint::new(x, y, class))
}

fn parse_ocr_item(v: &Value, path: &str) -> Result<OcrItem, FixtureError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FixtureError::schema(path, "expected an object"))?;
    let box_path = format!("{path}.box");
    let raw = obj
        .get("box")
        .ok_or_else(|| FixtureError::schema(&box_path, "missing required field"))?
        .as_array()
        .filter(|a| a.len() == 4)
        .ok_or_else(|| FixtureError::schema(&box_path, "expected [x, y, w, h]"))?;
    let mut vals = [0.0; 4];
    for (slot, n) in vals.iter_mut().zip(raw) {
        *slot = number(Some(n), &box_path)?;
    }
    let text_path = format!("{path}.text");
    let text = obj
        .get("text")
        .ok_or_else(|| FixtureError::schema(&text_path, "missing required field"))?
        .as_str()
        .ok_or_else(|| FixtureError::schema(&text_path, "expected a string"))?;
    let confidence = match obj.get("confidence") {
        None | Some(Value::Null) => 1.0,
        c => number(c, &format!("{path}.confidence"))?,
    };
    Ok(OcrItem {
        bbox: BoundingBox {
            min: Point2::new(vals[0], vals[1]),
            width: vals[2],
            height: vals[3],
        },
        text: text.to_owned(),
        confidence,
    })
}

fn parse_ground_truth(v: &Value) -> Result<GroundTruth, FixtureError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FixtureError::schema("ground_truth", "expected an object"))?;
    let unit = match obj.get("unit") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(FixtureError::schema("ground_truth.unit", "expected a string")),
    };
    let scale = match obj.get("scale") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s == "outer" => Some(ScaleKind::Outer),
        Some(Value::String(s)) if s == "inner" => Some(ScaleKind::Inner),
        Some(_) => {
            return Err(FixtureError::schema(
                "ground_truth.scale",
                "expected \"outer\" or \"inner\"",
            ))
        }
    };
    Ok(GroundTruth {
        reading: number(obj.get("reading"), "ground_truth.reading")?,
        range_min: number(obj.get("range_min"), "ground_truth.range_min")?,
        range_max: number(obj.get("range_max"), "ground_truth.range_max")?,
        unit,
        scale,
    })
}
