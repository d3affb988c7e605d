//! Frozen values cross-checked against straight-line reference implementations
//! that share no code with the library.

use slowspace_core::canonical::fnv1a64;
use slowspace_core::pcg::{expand_item, item_rng, mix, Catalog};
use slowspace_core::{canonical_bytes, scene_hash, Cell, GridSpec, ItemKind, Space};

mod reference {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn splitmix_stream(mut state: u64, n: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            state = state.wrapping_add(GAMMA);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            out.push(z ^ (z >> 31));
        }
        out
    }

    pub fn mix(a: u64, b: u64, c: u64) -> u64 {
        let first = |x: u64| splitmix_stream(x, 1)[0];
        first(first(a ^ b.rotate_left(17)) ^ c.rotate_left(31))
    }

    pub fn fnv(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    /// Canonical file of a fresh space, written out by hand.
    pub fn fresh_file(id: &str, name: &str, seed: u64, w: usize, h: usize, cs: &str) -> String {
        let n = w * h;
        format!(
            concat!(
                r#"{{"format":"slowspace","grid":{{"cell_size":{cs},"height":{h},"width":{w}}},"#,
                r#""items":[],"name":"{name}","next_item_id":1,"op_seq":0,"residue":[{res}],"#,
                r#""seed":{seed},"space_id":"{id}","terrain":[{ter}],"time_of_day":"morning","#,
                r#""version":1,"walls":[]}}"#
            ),
            cs = cs,
            h = h,
            w = w,
            name = name,
            res = vec!["0.0000"; n].join(","),
            seed = seed,
            id = id,
            ter = vec!["\"g\""; n].join(","),
        )
    }
}

#[test]
fn splitmix_reference_constant() {
    assert_eq!(
        reference::splitmix_stream(0, 1)[0],
        16_294_208_416_658_607_535
    );
    let mut r = slowspace_core::pcg::SplitMix64::new(0);
    assert_eq!(r.next_u64(), 16_294_208_416_658_607_535);
}

#[test]
fn item_stream_golden() {
    // frozen from an independent implementation
    assert_eq!(mix(42, 1, 0), 10_584_593_362_635_602_510);
    assert_eq!(item_rng(42, 1, 0).next_u64(), 7_855_598_112_592_905_098);
    for (seed, id, stream) in [(42, 1, 0), (0, 0, 0), (u64::MAX, 77, 9), (7, 1 << 40, 3)] {
        let expected = reference::splitmix_stream(reference::mix(seed, id, stream), 32);
        let mut r = item_rng(seed, id, stream);
        let got: Vec<u64> = (0..32).map(|_| r.next_u64()).collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn fresh_space_hash_golden() {
    let s = Space::new("s1", "demo", 42, GridSpec::default()).unwrap();
    let expected = reference::fresh_file("s1", "demo", 42, 16, 16, "2.0000");
    assert_eq!(String::from_utf8(canonical_bytes(&s)).unwrap(), expected);
    assert_eq!(
        reference::fnv(expected.as_bytes()),
        3_083_421_040_289_532_408
    );
    assert_eq!(scene_hash(&s), 3_083_421_040_289_532_408);
    assert_eq!(fnv1a64(b""), 14_695_981_039_346_656_037);
}

#[test]
fn tree_expansion_golden() {
    let mut s = Space::new("s1", "demo", 42, GridSpec::default()).unwrap();
    let id = s.place_item(ItemKind::Tree, Cell::new(3, 2)).unwrap();
    assert_eq!(id, 1);
    let cat = Catalog::default();
    let got = expand_item(&s, s.item(id).unwrap(), cat.get(ItemKind::Tree).unwrap()).unwrap();

    // (mesh, x, z, yaw_deg, scale)
    let expected: [(&str, f64, f64, f64, f64); 12] = [
        (
            "tree/variant_2",
            7.0,
            5.0,
            68.05549771575973,
            0.9479091671321238,
        ),
        (
            "tree/grass_tuft",
            7.584881445492986,
            4.634425141373537,
            319.8863903424745,
            1.0556769517623812,
        ),
        (
            "tree/grass_tuft",
            8.358693365415267,
            5.267300688247617,
            266.791999259897,
            1.0708436543274062,
        ),
        (
            "tree/grass_tuft",
            5.994932800971883,
            5.598110806192922,
            152.0066919473125,
            0.8762511432214989,
        ),
        (
            "tree/grass_tuft",
            7.815513579296682,
            5.180238155891475,
            52.46990192554394,
            1.0478287506410637,
        ),
        (
            "tree/grass_tuft",
            6.887639246755022,
            5.036379367847699,
            95.72510897676223,
            1.0368675183251423,
        ),
        (
            "tree/grass_tuft",
            5.089877388411467,
            5.4782021189379,
            268.48508914071175,
            0.7769213995532877,
        ),
        (
            "tree/grass_tuft",
            7.162225759387319,
            5.237279001029033,
            12.88029792660939,
            0.9842928714221462,
        ),
        (
            "tree/grass_tuft",
            6.965498016790686,
            4.730103280587347,
            242.90847641597247,
            1.2367303581311855,
        ),
        (
            "tree/grass_tuft",
            7.602470530431915,
            4.023204993102606,
            120.5324499863446,
            1.0603498944233696,
        ),
        (
            "tree/grass_tuft",
            7.027754232590678,
            5.498484269835196,
            266.94071134801317,
            0.7876882645638248,
        ),
        (
            "tree/mushroom",
            7.381969531204839,
            4.322491739390903,
            159.67859497521366,
            0.765092016487836,
        ),
    ];
    assert_eq!(got.len(), expected.len());
    for (inst, (mesh, x, z, yaw, scale)) in got.iter().zip(expected) {
        assert_eq!(inst.mesh, mesh);
        assert_eq!(inst.source_item, 1);
        assert!((inst.position.x - x).abs() < 1e-12, "{inst:?}");
        assert!((inst.position.z - z).abs() < 1e-12, "{inst:?}");
        assert_eq!(inst.position.y, 0.0);
        assert!((inst.yaw_deg - yaw).abs() < 1e-9, "{inst:?}");
        assert!((inst.scale - scale).abs() < 1e-12, "{inst:?}");
    }
}
