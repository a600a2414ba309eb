use patchflow::solver::VelocitySpec;
use patchflow_cli::config::{parse_config, ConfigError, Experiment, Shape};
use proptest::prelude::*;

const BASE: &str = r#"[sim]
name = "t"
n = 64
nu = 0.5

[patch]
shape = "disk"
radius = 1.0

[velocity]
family = "gaussian_vortex"
sigma = 0.5
amplitude = 0.1
"#;

fn err(text: &str) -> ConfigError {
    parse_config(text).expect_err("config should be rejected")
}

#[test]
fn unknown_key_is_located() {
    let e = err(&BASE.replace("nu = 0.5", "nu = 0.5\nviscosity = 0.5"));
    assert_eq!(e.line, 5, "{e}");
    assert!(e.message.contains("viscosity"), "{e}");
}

#[test]
fn misspelled_section_is_rejected() {
    let e = err(&BASE.replace("[patch]", "[patches]"));
    assert_eq!(e.line, 6, "{e}");
}

#[test]
fn duplicate_key_is_located() {
    let e = err(&BASE.replace("nu = 0.5", "nu = 0.5\nnu = 0.2"));
    assert_eq!(e.line, 5, "{e}");
    assert!(e.message.contains("duplicate"), "{e}");
}

#[test]
fn type_mismatch_is_located() {
    let e = err(&BASE.replace("n = 64", "n = \"sixty-four\""));
    assert_eq!((e.line, e.column), (3, 5), "{e}");
}

#[test]
fn integers_are_accepted_as_floats() {
    let s = parse_config(&BASE.replace("radius = 1.0", "radius = 1")).unwrap();
    assert!(matches!(s.patch.shape, Shape::Disk { radius, .. } if radius == 1.0));
}

#[test]
fn range_errors_point_at_the_value() {
    let e = err(&BASE
        .replace("amplitude = 0.1", "amplitude = 0.1\nsigma = -2")
        .replace("sigma = 0.5\n", ""));
    assert!(e.message.contains("sigma must be positive"), "{e}");
    assert_eq!(e.line, 13, "{e}");
    let e = err(&BASE.replace("n = 64", "n = 63"));
    assert_eq!(e.line, 3);
}

#[test]
fn missing_required_key_names_it() {
    let e = err(&BASE.replace("name = \"t\"\n", ""));
    assert!(e.message.contains("sim.name"), "{e}");
}

#[test]
fn shape_keys_are_checked() {
    let e = err(&BASE.replace("radius = 1.0", "radius = 1.0\nwidth = 2.0"));
    assert!(e.message.contains("not used by shape `disk`"), "{e}");
    assert_eq!(e.line, 9);
}

#[test]
fn cfl_violation_is_rejected_at_dt() {
    let text = BASE
        .replace("nu = 0.5", "nu = 0.5\ndt = 0.5")
        .replace("amplitude = 0.1", "amplitude = 5.0");
    let e = err(&text);
    assert!(e.message.contains("CFL"), "{e}");
    assert_eq!((e.line, e.column), (5, 6));
}

#[test]
fn stability_amplitude_adds_an_experiment() {
    let s = parse_config(&format!(
        "{BASE}\n[experiments]\nstability_amplitude = 0.01\n"
    ))
    .unwrap();
    assert!(s
        .experiments
        .contains(&Experiment::Stability { amplitude: 0.01 }));
    let s = parse_config(BASE).unwrap();
    assert!(!s
        .experiments
        .iter()
        .any(|e| matches!(e, Experiment::Stability { .. })));
}

#[test]
fn mean_is_added_as_a_constant_part() {
    let s = parse_config(&BASE.replace("amplitude = 0.1", "amplitude = 0.1\nmean = [0.2, 0.0]"))
        .unwrap();
    match &s.config.initial_velocity {
        VelocitySpec::Sum { parts } => {
            assert_eq!(parts[1], VelocitySpec::Constant { m: [0.2, 0.0] })
        }
        v => panic!("unexpected {v:?}"),
    }
    let text = s.to_config_text().unwrap();
    assert_eq!(parse_config(&text).unwrap(), s);
}

fn family() -> impl Strategy<Value = String> {
    prop_oneof![
        (-0.5f64..0.5, -0.5f64..0.5).prop_map(|(a, b)| format!("family = \"constant\"\nm = [{a:?}, {b:?}]")),
        (0.01f64..1.0).prop_map(|a| format!("family = \"taylor_green\"\namplitude = {a:?}")),
        (0.2f64..0.8, 0.01f64..0.3).prop_map(|(s, a)| format!("family = \"dipole\"\nsigma = {s:?}\namplitude = {a:?}")),
        (1.0f64..4.0, 0.5f64..1.5, 0.0f64..3.0).prop_map(|(k, w, d)| format!(
            "family = \"single_shell\"\nk = {k:?}\nwidth = {w:?}\namplitude = 0.1\ndirection = {d:?}"
        )),
        (1usize..4, 0.3f64..1.0).prop_map(|(s, d)| format!(
            "family = \"lacunary\"\nk0 = 1.5\nshells = {s}\ndecay = {d:?}\namplitude = 0.1\nmean = [0.1, 0.0]"
        )),
        (1usize..4, -3.0f64..3.0).prop_map(|(s, th)| format!(
            "family = \"jet_stack\"\nshells = {s}\ndirection = {th:?}\namplitude = 0.1\nwidth = 1.5"
        )),
    ]
}

fn shape() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("shape = \"none\"".to_string()),
        (0.5f64..1.5, -0.5f64..0.5)
            .prop_map(|(r, c)| format!("shape = \"disk\"\nradius = {r:?}\ncenter = [{c:?}, 0.0]")),
        (0.5f64..1.5, 0.5f64..1.5)
            .prop_map(|(a, b)| format!("shape = \"ellipse\"\na = {a:?}\nb = {b:?}")),
        (0.5f64..2.0, 0.5f64..2.0)
            .prop_map(|(w, h)| format!("shape = \"rectangle\"\nwidth = {w:?}\nheight = {h:?}")),
        (1.0f64..2.0)
            .prop_map(|s| format!("shape = \"rounded_square\"\nside = {s:?}\ncorner_radius = 0.2")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn emitted_config_parses_back_identically(
        fam in family(),
        shp in shape(),
        nu in 0.01f64..2.0,
        eps in 1e-4f64..1.0,
        tracers in 0usize..64,
        every in 1usize..10,
        seed in 0u64..1000,
    ) {
        let text = format!(
            "[sim]\nname = \"p\"\nn = 32\nnu = {nu:?}\nepsilon = {eps:?}\nseed = {seed}\noutput_every = {every}\n\n[patch]\n{shp}\n\n[velocity]\n{fam}\n\n[experiments]\ntracers = {tracers}\n"
        );
        let s = parse_config(&text).unwrap();
        let emitted = s.to_config_text().unwrap();
        prop_assert_eq!(parse_config(&emitted).unwrap(), s);
    }
}
