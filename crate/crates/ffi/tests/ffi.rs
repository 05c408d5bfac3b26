use std::ffi::{CStr, CString};
use std::ptr;

use gauge_reader::synthgauge::{generate_scene, EllipseSpec, ScaleArc, SceneSpec, ValueRange, Direction};
use gauge_reader::serialize_fixture;
use gauge_reader_ffi::*;

fn scene_bytes(needle_value: f64) -> Vec<u8> {
    let spec = SceneSpec {
        crop_size: (448, 448),
        ellipse: EllipseSpec { center: [224.0, 224.0], a: 150.0, b: 110.0, theta: 0.4 },
        scale_arc: ScaleArc {
            start_angle: 0.75 * std::f64::consts::PI,
            end_angle: 0.25 * std::f64::consts::PI,
            direction: Direction::Clockwise,
        },
        range: ValueRange { min: 0.0, max: 16.0, unit: "bar".into() },
        n_major_notches: 9,
        needle_value,
        marker_radius_factor: 0.8,
        second_scale: None,
    };
    serialize_fixture(&generate_scene(&spec).unwrap().0)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(gr_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn read_round_trip() {
    let doc = scene_bytes(6.0);
    unsafe {
        let mut fixture = ptr::null_mut();
        assert_eq!(gr_fixture_parse(doc.as_ptr(), doc.len(), &mut fixture), GrStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(gr_read_gauge(fixture, ptr::null(), &mut report), GrStatus::Ok);
        assert_eq!(gr_report_reading_count(report), 1);
        let (mut scale, mut value) = (GrScale::Outer, 0.0);
        assert_eq!(gr_report_reading(report, 0, &mut scale, &mut value), GrStatus::Ok);
        assert_eq!(scale, GrScale::Inner);
        assert!((value - 6.0).abs() < 1e-6, "{value}");
        assert_eq!(gr_report_reading(report, 1, &mut scale, &mut value), GrStatus::OutOfRange);
        assert_eq!(gr_report_failure(report), GrStageResult::Ok);
        assert_eq!(gr_report_stage(report, GrStage::Ocr), GrStageResult::Ok);

        let mut json = ptr::null_mut();
        assert_eq!(gr_report_to_json(report, &mut json), GrStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.starts_with("{\"schema\":1"));
        gr_string_free(json);
        gr_report_free(report);
        gr_fixture_free(fixture);
    }
}

#[test]
fn explicit_config_matches_default() {
    let doc = scene_bytes(3.5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"ransac":{"seed":7}}"#).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut fixture = ptr::null_mut();
        assert_eq!(gr_fixture_parse(doc.as_ptr(), doc.len(), &mut fixture), GrStatus::Ok);
        let mut cfg = ptr::null_mut();
        assert_eq!(gr_config_load(cpath.as_ptr(), &mut cfg), GrStatus::Ok);
        let mut dflt = ptr::null_mut();
        assert_eq!(gr_config_default(&mut dflt), GrStatus::Ok);
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        gr_read_gauge(fixture, cfg, &mut a);
        gr_read_gauge(fixture, dflt, &mut b);
        let (mut s, mut va, mut vb) = (GrScale::Outer, 0.0, 1.0);
        gr_report_reading(a, 0, &mut s, &mut va);
        gr_report_reading(b, 0, &mut s, &mut vb);
        assert!((va - vb).abs() < 1e-9);
        for r in [a, b] {
            gr_report_free(r);
        }
        gr_config_free(cfg);
        gr_config_free(dflt);
        gr_fixture_free(fixture);
    }
}

#[test]
fn parse_errors_have_codes_and_messages() {
    unsafe {
        let mut fixture = ptr::null_mut();
        let bad = b"{not json";
        assert_eq!(gr_fixture_parse(bad.as_ptr(), bad.len(), &mut fixture), GrStatus::SyntaxError);
        assert!(fixture.is_null());
        assert!(!last_error().is_empty());

        let schema = br#"{"schema":1,"keypoints":[{"x":1,"y":1,"class":"middle"}],"needle_points":[]}"#;
        assert_eq!(gr_fixture_parse(schema.as_ptr(), schema.len(), &mut fixture), GrStatus::SchemaError);
        assert!(last_error().contains("keypoints[0].class"), "{}", last_error());

        assert_eq!(gr_fixture_parse(ptr::null(), 4, &mut fixture), GrStatus::NullPointer);
        assert_eq!(gr_fixture_parse(bad.as_ptr(), bad.len(), ptr::null_mut()), GrStatus::NullPointer);

        let missing = CString::new("/nonexistent/cfg.json").unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(gr_config_load(missing.as_ptr(), &mut cfg), GrStatus::Io);
    }
}

#[test]
fn failed_stage_is_reported() {
    let doc = br#"{"schema":1,"keypoints":[{"x":10,"y":10,"class":"start"},{"x":20,"y":12,"class":"intermediate"},{"x":30,"y":20,"class":"end"}],"needle_points":[[1,1],[2,2]]}"#;
    unsafe {
        let mut fixture = ptr::null_mut();
        assert_eq!(gr_fixture_parse(doc.as_ptr(), doc.len(), &mut fixture), GrStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(gr_read_gauge(fixture, ptr::null(), &mut report), GrStatus::Ok);
        assert_eq!(gr_report_reading_count(report), 0);
        assert_eq!(gr_report_failure(report), GrStageResult::InsufficientNotches);
        assert_eq!(gr_report_stage(report, GrStage::Ellipse), GrStageResult::InsufficientNotches);
        assert_eq!(gr_report_stage(report, GrStage::Needle), GrStageResult::NotRun);
        gr_report_free(report);
        gr_fixture_free(fixture);
    }
}

#[test]
fn relative_error_and_ellipse_fit() {
    unsafe {
        let mut re = 0.0;
        assert_eq!(gr_relative_error(2.0, 1.0, 0.0, 1.6, &mut re), GrStatus::Ok);
        assert!((re - 62.5).abs() < 1e-12);
        assert_eq!(gr_relative_error(2.0, 1.0, 1.0, 1.0, &mut re), GrStatus::InvalidArgument);

        let xy: Vec<f64> = (0..8)
            .flat_map(|k| {
                let t = k as f64 * 0.7;
                [2.0 + 4.0 * t.cos(), 3.0 + 2.0 * t.sin()]
            })
            .collect();
        let mut e = GrEllipse::default();
        assert_eq!(gr_fit_ellipse(xy.as_ptr(), 8, &mut e), GrStatus::Ok);
        assert!((e.center_x - 2.0).abs() < 1e-9 && (e.center_y - 3.0).abs() < 1e-9);
        assert!((e.a - 4.0).abs() < 1e-9 && (e.b - 2.0).abs() < 1e-9);
        assert_eq!(gr_fit_ellipse(xy.as_ptr(), 4, &mut e), GrStatus::InvalidArgument);
        assert!(last_error().contains("at least 5"));
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        gr_fixture_free(ptr::null_mut());
        gr_config_free(ptr::null_mut());
        gr_report_free(ptr::null_mut());
        gr_string_free(ptr::null_mut());
        assert_eq!(gr_report_reading_count(ptr::null()), 0);
        assert_eq!(gr_report_failure(ptr::null()), GrStageResult::NotRun);
        let mut json = ptr::null_mut();
        assert_eq!(gr_report_to_json(ptr::null(), &mut json), GrStatus::NullPointer);
        assert!(json.is_null());
    }
    let v = unsafe { CStr::from_ptr(gr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gauge_reader.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct GrFixture GrFixture;"));
}
