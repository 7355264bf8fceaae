use proptest::prelude::*;
use shearstab_cli::config::{Params, RunConfig, KEYS, SECTIONS};

fn value_for(key: &str) -> BoxedStrategy<String> {
    let float = || prop::num::f64::NORMAL.prop_map(|x| x.to_string()).boxed();
    let count = || (0usize..100_000).prop_map(|x| x.to_string()).boxed();
    match key {
        "profile" => prop::sample::select(vec!["poiseuille", "quartic", "sextic", "exponential"])
            .prop_map(String::from)
            .boxed(),
        "p" => (1u32..8).prop_map(|x| x.to_string()).boxed(),
        "seed" => any::<u64>().prop_map(|x| x.to_string()).boxed(),
        "branch" => prop::sample::select(vec!["lower", "upper", "both"]).prop_map(String::from).boxed(),
        "quantity" => prop::sample::select(vec!["growth", "landau"]).prop_map(String::from).boxed(),
        "mean_forcing" => prop::sample::select(vec!["single", "double"]).prop_map(String::from).boxed(),
        "closure" => prop::sample::select(vec!["fixed_flux", "fixed_pressure"]).prop_map(String::from).boxed(),
        "output" => "[a-z0-9_./-]{1,16}".boxed(),
        "n_points" | "steps" | "nx" | "workers" | "alpha_steps" => count(),
        _ => float(),
    }
}

fn params() -> impl Strategy<Value = Params> {
    let per_key: Vec<_> = KEYS.iter().map(|k| prop::option::of(value_for(k))).collect();
    per_key.prop_map(|values| {
        let mut p = Params::default();
        for (k, v) in KEYS.iter().zip(values) {
            if let Some(v) = v {
                p.set(k, &v).unwrap();
            }
        }
        p
    })
}

fn config() -> impl Strategy<Value = RunConfig> {
    let sections = prop::collection::btree_map(
        prop::sample::select(SECTIONS.to_vec()).prop_map(String::from),
        params(),
        0..4,
    );
    (params(), sections).prop_map(|(global, sections)| RunConfig { global, sections })
}

proptest! {
    #[test]
    fn text_round_trip_is_identity(cfg in config()) {
        let text = cfg.to_string();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn flags_win_over_sections(cfg in config(), seed in any::<u64>()) {
        let mut flags = Params::default();
        flags.set("seed", &seed.to_string()).unwrap();
        for s in SECTIONS {
            let p = cfg.for_command(s).overlay(&flags);
            prop_assert_eq!(p.seed, Some(seed));
            let section = cfg.sections.get(*s).and_then(|x| x.profile.clone());
            prop_assert_eq!(p.profile, section.or(cfg.global.profile.clone()));
        }
    }
}

#[test]
fn empty_section_survives() {
    let cfg = RunConfig::parse("[wave]\n").unwrap();
    assert!(cfg.sections["wave"] == Params::default());
    assert_eq!(cfg.to_string(), "\n[wave]\n");
    assert_eq!(RunConfig::parse(&cfg.to_string()).unwrap(), cfg);
}
