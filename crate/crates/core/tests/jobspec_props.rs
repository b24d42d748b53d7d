mod common;

use std::collections::BTreeMap;

use common::{strands, structure_of};
use mdpipe::jobspec::{
    clean_jobspec, parse_jobspec, preflight_structure, serialize_jobspec, validate_jobspec, validate_membrane_geometry,
    CaseType, CellSpec, IonPlacement, Membrane, OrientationSource, Protocol, DEFAULT_MEMBRANE_MARGIN,
};
use mdpipe::{JobSpec, Vec3};
use proptest::prelude::*;

fn leaflet() -> impl Strategy<Value = BTreeMap<String, f64>> {
    proptest::collection::btree_map(prop_oneof![Just("POPC"), Just("POPE"), Just("CHL1"), Just("POPG")], 0.5f64..8.0, 1..4)
        .prop_map(|m| m.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

prop_compose! {
    fn membrane()(upper in leaflet(), lower in leaflet(), xy in 30.0f64..150.0) -> Membrane {
        Membrane { upper_lipids: upper, lower_lipids: lower, xy_dim: xy }
    }
}

prop_compose! {
    fn spec()(
        label in "[ ]{0,2}[A-Za-z][A-Za-z0-9 _-]{0,12}[ ]{0,2}",
        id in "[0-9][A-Za-z0-9]{3}",
        bilayer in any::<bool>(),
        temperature in 250.0f64..380.0,
        hmr in any::<bool>(),
        conc in 0.0f64..1.0,
        placement in prop_oneof![Just(IonPlacement::MonteCarlo), Just(IonPlacement::Distance)],
        orientation in prop_oneof![Just(OrientationSource::None), Just(OrientationSource::Opm), Just(OrientationSource::Pdb)],
        mem in membrane(),
        pore in any::<bool>(),
        ph in proptest::option::of(4.0f64..9.0),
        cell in proptest::option::of((20.0f64..150.0, 20.0f64..150.0, 20.0f64..150.0)),
        protocol in (1u64..50_000, 0.01f64..5.0),
    ) -> JobSpec {
        let case = if bilayer { CaseType::Bilayer } else { CaseType::Solution };
        let mut s = JobSpec::new(label, id, case, temperature);
        s.hmr = hmr;
        s.ion_concentration = conc;
        s.ion_placement = placement;
        s.orientation_source = orientation;
        s.membrane = bilayer.then_some(mem);
        s.pore_water = pore;
        s.ph = ph;
        s.cell = cell.map(|(a, b, c)| CellSpec { a, b, c });
        s.protocol = Protocol { minimization_steps: protocol.0, equilibration_ns: protocol.1 };
        s
    }
}

proptest! {
    #[test]
    fn clean_is_idempotent(s in spec()) {
        let once = clean_jobspec(&s);
        prop_assert_eq!(clean_jobspec(&once), once);
    }

    #[test]
    fn serialize_round_trips(s in spec()) {
        let clean = clean_jobspec(&s);
        let parsed = parse_jobspec(&serialize_jobspec(&clean)).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        prop_assert_eq!(parsed.spec, clean);
    }

    #[test]
    fn clean_leaflets_sum_to_one(m in membrane()) {
        let mut s = JobSpec::new("x", "1abc", CaseType::Bilayer, 310.0);
        s.membrane = Some(m);
        let c = clean_jobspec(&s);
        let m = c.membrane.unwrap();
        for leaf in [&m.upper_lipids, &m.lower_lipids] {
            prop_assert!((leaf.values().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_is_repeatable(s in spec()) {
        prop_assert_eq!(validate_jobspec(&s, None).to_json(), validate_jobspec(&s, None).to_json());
    }
}

fn bilayer_spec(xy: f64) -> JobSpec {
    let mut s = JobSpec::new("m", "1abc", CaseType::Bilayer, 310.0);
    s.membrane = Some(Membrane {
        upper_lipids: BTreeMap::from([("POPC".into(), 1.0)]),
        lower_lipids: BTreeMap::from([("POPC".into(), 1.0)]),
        xy_dim: xy,
    });
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn membrane_verdict_ignores_translation_and_xy_swap(
        n_strands in 1usize..8,
        residues in 1usize..10,
        xy in 15.0f64..80.0,
        shift in (-500.0f64..500.0, -500.0f64..500.0, -500.0f64..500.0),
    ) {
        let (_, s) = structure_of(&strands(n_strands, residues));
        let spec = bilayer_spec(xy);
        let verdict = |st: &mdpipe::Structure| validate_membrane_geometry(st, &spec, DEFAULT_MEMBRANE_MARGIN).has_errors();
        let base = verdict(&s);

        let mut moved = s.clone();
        for a in &mut moved.atoms {
            a.position = a.position + Vec3::new(shift.0, shift.1, shift.2);
        }
        prop_assert_eq!(verdict(&moved), base);

        let mut swapped = s.clone();
        for a in &mut swapped.atoms {
            a.position = Vec3::new(a.position.y, a.position.x, a.position.z);
        }
        prop_assert_eq!(verdict(&swapped), base);
    }

    #[test]
    fn preflight_leaves_structure_untouched(n_strands in 1usize..5, residues in 1usize..8) {
        let (_, s) = structure_of(&strands(n_strands, residues));
        let before = s.clone();
        let a = preflight_structure(&s);
        prop_assert_eq!(&s, &before);
        prop_assert_eq!(a, preflight_structure(&s));
    }
}
