use mdpipe::structure_io::{parse_pdb, parse_psf, read_dcd, write_dcd, write_psf, DcdHeader, Endianness};
use mdpipe::{Frame, Topology, UnitCell, Vec3};
use proptest::prelude::*;

fn endianness() -> impl Strategy<Value = Endianness> {
    prop_oneof![Just(Endianness::Little), Just(Endianness::Big)]
}

// f32-representable coordinates so the round trip is bit-exact.
fn coord() -> impl Strategy<Value = f64> {
    (-5000.0f32..5000.0).prop_map(|v| v as f64)
}

fn cell() -> impl Strategy<Value = UnitCell> {
    (1.0..200.0, 1.0..200.0, 1.0..200.0, 30.0..150.0, 30.0..150.0, 30.0..150.0)
        .prop_map(|(a, b, c, alpha, beta, gamma)| UnitCell { a, b, c, alpha, beta, gamma })
}

fn title() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_]([A-Za-z0-9 _.:]{0,78}[A-Za-z0-9_])?"
}

prop_compose! {
    fn trajectory(max_atoms: usize, max_frames: usize)
        (n_atoms in 1..=max_atoms, n_frames in 0..=max_frames, with_cell in any::<bool>(), xplor in any::<bool>())
        (frames in proptest::collection::vec(
            (proptest::collection::vec((coord(), coord(), coord()), n_atoms), cell()), n_frames),
         endianness in endianness(),
         first_step in -1000i32..100_000,
         step_interval in 1i32..10_000,
         timestep in 0.0f32..1.0,
         titles in proptest::collection::vec(title(), 0..4),
         with_cell in Just(with_cell && !xplor),
         xplor in Just(xplor),
         n_atoms in Just(n_atoms))
        -> (DcdHeader, Vec<Frame>)
    {
        let mut header = DcdHeader::new(n_atoms, frames.len() as u32);
        header.endianness = endianness;
        header.first_step = first_step;
        header.step_interval = step_interval;
        header.timestep = timestep;
        header.titles = titles;
        header.has_unit_cell = with_cell;
        header.charmm_version = if xplor { 0 } else { 24 };
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, (xyz, c))| {
                let mut f = Frame::new(i, xyz.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect());
                f.unit_cell = with_cell.then_some(c);
                f
            })
            .collect();
        (header, frames)
    }
}

fn round_trip(header: &DcdHeader, frames: &[Frame]) -> (DcdHeader, Vec<Frame>) {
    let bytes = write_dcd(header, frames).unwrap();
    let (h, reader) = read_dcd(&bytes).unwrap();
    let back: Vec<Frame> = reader.map(|f| f.unwrap()).collect();
    (h, back)
}

fn assert_bit_exact(a: &[Frame], b: &[Frame]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.index, y.index);
        assert_eq!(x.coords.len(), y.coords.len());
        for (p, q) in x.coords.iter().zip(&y.coords) {
            for k in 0..3 {
                assert_eq!(p[k].to_bits(), q[k].to_bits());
            }
        }
        assert_eq!(x.unit_cell, y.unit_cell);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dcd_round_trip((header, frames) in trajectory(64, 12)) {
        let (h, back) = round_trip(&header, &frames);
        prop_assert_eq!(&h, &header);
        assert_bit_exact(&frames, &back);
    }

    #[test]
    fn dcd_byte_order_does_not_change_values((header, frames) in trajectory(16, 4)) {
        let mut flipped = header.clone();
        flipped.endianness = match header.endianness {
            Endianness::Little => Endianness::Big,
            Endianness::Big => Endianness::Little,
        };
        let (_, a) = round_trip(&header, &frames);
        let (h, b) = round_trip(&flipped, &frames);
        prop_assert_eq!(h.endianness, flipped.endianness);
        assert_bit_exact(&a, &b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn dcd_round_trip_large(n_atoms in 5000usize..=10_000, n_frames in 0usize..=3, big in any::<bool>(), seed in any::<u32>()) {
        let mut header = DcdHeader::new(n_atoms, n_frames as u32);
        header.endianness = if big { Endianness::Big } else { Endianness::Little };
        let frames: Vec<Frame> = (0..n_frames)
            .map(|f| {
                Frame::new(f, (0..n_atoms).map(|i| {
                    let t = (seed as usize + i * 7 + f * 13) as f32;
                    Vec3::new((t * 0.37).sin() as f64 * 80.0, (t * 0.11).cos() as f64 * 80.0, (t * 0.013) as f64)
                }).map(|p| Vec3::new(p.x as f32 as f64, p.y as f32 as f64, p.z as f32 as f64)).collect())
            })
            .collect();
        let (h, back) = round_trip(&header, &frames);
        prop_assert_eq!(h, header);
        assert_bit_exact(&frames, &back);
    }
}

#[test]
fn dcd_hundred_frames_both_orders() {
    for e in [Endianness::Little, Endianness::Big] {
        let mut header = DcdHeader::new(3, 100);
        header.endianness = e;
        header.has_unit_cell = true;
        let frames: Vec<Frame> = (0..100)
            .map(|i| {
                let mut f = Frame::new(i, vec![Vec3::new(i as f64, 0.5, -0.25); 3]);
                f.unit_cell = Some(UnitCell::orthorhombic(40.0 + i as f64, 41.0, 42.0));
                f
            })
            .collect();
        let (h, back) = round_trip(&header, &frames);
        assert_eq!(h, header);
        assert_bit_exact(&frames, &back);
    }
}

// ---- PDB ----

const PDB_LINE: &str = "ATOM     17  CA  LYS A  42I     11.104   6.134  -6.504  0.75 21.30           C  ";

// Columns (1-based) that no ATOM field reads.
const UNREAD_COLUMNS: [usize; 11] = [12, 21, 28, 29, 30, 67, 70, 73, 76, 79, 80];

proptest! {
    #[test]
    fn pdb_ignores_unread_columns(subs in proptest::collection::vec((0..UNREAD_COLUMNS.len(), proptest::char::range('!', '~')), 1..8)) {
        let reference = parse_pdb(PDB_LINE).unwrap();
        let mut line: Vec<u8> = PDB_LINE.as_bytes().to_vec();
        for (k, c) in subs {
            line[UNREAD_COLUMNS[k] - 1] = c as u8;
        }
        let parsed = parse_pdb(std::str::from_utf8(&line).unwrap()).unwrap();
        prop_assert_eq!(parsed.atoms, reference.atoms);
    }

    #[test]
    fn pdb_trailing_text_is_ignored(tail in "[ -~]{0,40}") {
        let reference = parse_pdb(PDB_LINE).unwrap();
        let parsed = parse_pdb(&format!("{PDB_LINE}{tail}")).unwrap();
        prop_assert_eq!(parsed.atoms, reference.atoms);
    }

    #[test]
    fn pdb_coordinates_read_back(x in -999.0f64..9999.0, y in -999.0f64..9999.0, z in -999.0f64..9999.0) {
        let f = |v: f64| format!("{v:>8.3}");
        let line = format!("{}{}{}{}{}", &PDB_LINE[..30], f(x), f(y), f(z), &PDB_LINE[54..]);
        let a = &parse_pdb(&line).unwrap().atoms[0];
        prop_assert!((a.position.x - x).abs() <= 5e-4);
        prop_assert!((a.position.y - y).abs() <= 5e-4);
        prop_assert!((a.position.z - z).abs() <= 5e-4);
    }
}

#[test]
fn pdb_reference_fields() {
    let a = &parse_pdb(PDB_LINE).unwrap().atoms[0];
    assert_eq!(a.serial, 17);
    assert_eq!(a.name.trim(), "CA");
    assert_eq!(a.res_name, "LYS");
    assert_eq!(a.chain_id, 'A');
    assert_eq!(a.res_seq, 42);
    assert_eq!(a.insertion_code, Some('I'));
    assert_eq!(a.position, Vec3::new(11.104, 6.134, -6.504));
    assert_eq!(a.occupancy, 0.75);
    assert_eq!(a.b_factor, 21.30);
    assert_eq!(a.element, "C");
}

// ---- PSF ----

fn brute_sites(elements: &[String], bonds: &[(usize, usize)]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let polar = |e: &str| matches!(e, "N" | "O" | "S");
    let mut donors = Vec::new();
    for &(a, b) in bonds {
        for (d, h) in [(a, b), (b, a)] {
            if polar(&elements[d]) && elements[h] == "H" {
                donors.push((d, h));
            }
        }
    }
    donors.sort_unstable();
    donors.dedup();
    let acceptors = (0..elements.len()).filter(|&i| polar(&elements[i])).collect();
    (donors, acceptors)
}

const KINDS: [(&str, f64, &str); 5] = [
    ("N", 14.007, "N"),
    ("HN", 1.008, "H"),
    ("CA", 12.011, "C"),
    ("OG", 15.999, "O"),
    ("SD", 32.06, "S"),
];

proptest! {
    #[test]
    fn psf_sites_match_brute_force(
        kinds in proptest::collection::vec(0..KINDS.len(), 2..40),
        raw_bonds in proptest::collection::vec((0usize..1000, 0usize..1000), 0..60),
    ) {
        let n = kinds.len();
        let bonds: Vec<(usize, usize)> = raw_bonds
            .into_iter()
            .map(|(a, b)| (a % n, b % n))
            .filter(|(a, b)| a != b)
            .collect();
        let mut topo = Topology::default();
        for (i, &k) in kinds.iter().enumerate() {
            let (name, mass, _) = KINDS[k];
            topo.atom_names.push(name.into());
            topo.res_names.push("SER".into());
            topo.res_ids.push((i + 1).to_string());
            topo.segids.push("PROA".into());
            topo.elements.push(KINDS[k].2.into());
            topo.masses.push(mass);
            topo.charges.push(0.0);
        }
        topo.bonds = bonds;
        let parsed = parse_psf(&write_psf(&topo)).unwrap();
        prop_assert_eq!(&parsed.elements, &topo.elements);
        prop_assert_eq!(&parsed.bonds, &topo.bonds);
        let (donors, acceptors) = brute_sites(&parsed.elements, &parsed.bonds);
        prop_assert_eq!(parsed.donors, donors);
        prop_assert_eq!(parsed.acceptors, acceptors);
    }
}
