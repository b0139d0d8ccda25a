use super::load::{load_model, Model};
use super::model::{Mode, StabilitySpec, SwitchedPlant};
use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Polynomial};

const SOURCES: [&str; 21] = [
    include_str!("../../catalog/system01.json"),
    include_str!("../../catalog/system02.json"),
    include_str!("../../catalog/system03.json"),
    include_str!("../../catalog/system04.json"),
    include_str!("../../catalog/system05.json"),
    include_str!("../../catalog/system06.json"),
    include_str!("../../catalog/system07.json"),
    include_str!("../../catalog/system08.json"),
    include_str!("../../catalog/system09.json"),
    include_str!("../../catalog/system10.json"),
    include_str!("../../catalog/system11.json"),
    include_str!("../../catalog/system12.json"),
    include_str!("../../catalog/system13.json"),
    include_str!("../../catalog/system14.json"),
    include_str!("../../catalog/system15.json"),
    include_str!("../../catalog/system16.json"),
    include_str!("../../catalog/system17.json"),
    include_str!("../../catalog/system18.json"),
    include_str!("../../catalog/system19.json"),
    include_str!("../../catalog/system20.json"),
    include_str!("../../catalog/system21.json"),
];

/// Number of shipped benchmark systems.
pub const CATALOG_SIZE: usize = SOURCES.len();

/// Raw JSON of catalog entry `id` (1-based).
pub fn catalog_source(id: u32) -> Result<&'static str> {
    SOURCES
        .get((id as usize).wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::Invalid(format!("no catalog entry {id}")))
}

pub fn catalog_entry(id: u32) -> Result<Model> {
    load_model(catalog_source(id)?)
}

/// All benchmark systems in id order.
pub fn benchmark_catalog() -> Vec<Model> {
    (1..=CATALOG_SIZE as u32).map(|id| catalog_entry(id).expect("shipped catalog entry loads")).collect()
}

/// Ids of switched (1..=14) or control-affine (15..=21) benchmarks.
pub fn suite_ids(affine: bool) -> Vec<u32> {
    if affine {
        (15..=21).collect()
    } else {
        (1..=14).collect()
    }
}

/// Room heating benchmark on a ring of `rooms` rooms.
///
/// Temperatures are shifted by 21 degrees. Room `i` leaks with coefficient
/// 10.5 (11.5 while heated), exchanges heat with its two ring neighbours with
/// coefficient 5, and receives 55 units when heated and 5 otherwise; all rates
/// are divided by 100. Mode `q0` has every heater off and mode `q{k}` turns on
/// the heaters listed in `groups[k-1]`.
pub fn heater_plant(rooms: usize, groups: &[Vec<usize>]) -> Result<SwitchedPlant> {
    if rooms < 2 {
        return Err(Error::Invalid("heater ring needs at least two rooms".into()));
    }
    let variables: Vec<String> = (1..=rooms).map(|i| format!("t{i}")).collect();
    let mut sets = vec![Vec::new()];
    sets.extend(groups.iter().cloned());
    let modes = sets
        .iter()
        .enumerate()
        .map(|(k, heated)| {
            let field = (0..rooms)
                .map(|i| {
                    let on = heated.contains(&i);
                    let leak = if on { 11.5 } else { 10.5 };
                    let input = if on { 55.0 } else { 5.0 };
                    let mut nbrs = vec![(i + rooms - 1) % rooms, (i + 1) % rooms];
                    nbrs.sort_unstable();
                    nbrs.dedup();
                    let mut f = Polynomial::var(rooms, i).scale(-leak);
                    let mut c = -21.0 * leak + input;
                    for &j in &nbrs {
                        f = f.add(&Polynomial::var(rooms, j).scale(5.0));
                        c += 5.0 * 21.0;
                    }
                    f.add(&Polynomial::constant(rooms, c)).scale(0.01)
                })
                .collect();
            Mode { id: format!("q{k}"), field }
        })
        .collect();
    let mut spec = StabilitySpec::region(1.0);
    spec.init_radius = Some(2.5);
    SwitchedPlant::new(format!("heater-{rooms}-rooms"), variables, modes, BoxDomain::symmetric(rooms, 5.0), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{Plant, SpecKind};

    #[test]
    fn catalog_has_all_systems() {
        let all = benchmark_catalog();
        assert_eq!(all.len(), 21);
        for (k, m) in all.iter().enumerate() {
            assert_eq!(m.id, Some(k as u32 + 1));
            let s = m.plant.to_switched().unwrap();
            if s.spec.kind == SpecKind::AS && !m.plant.is_affine() {
                assert!(s.modes.iter().any(Mode::vanishes_at_origin), "entry {}", k + 1);
            }
        }
        assert!(catalog_entry(0).is_err() && catalog_entry(22).is_err());
    }

    #[test]
    fn entry_shapes() {
        let m1 = catalog_entry(1).unwrap();
        match &m1.plant {
            Plant::Switched(p) => {
                assert_eq!(p.modes.len(), 5);
                assert_eq!(p.n(), 2);
                assert_eq!(p.domain, BoxDomain::symmetric(2, 1.0));
            }
            _ => panic!("entry 1 is switched"),
        }
        let m5 = catalog_entry(5).unwrap().plant.to_switched().unwrap();
        assert_eq!((m5.n(), m5.modes.len()), (3, 3));
        assert_eq!(m5.domain, BoxDomain::symmetric(3, 1.0));
        match catalog_entry(15).unwrap().plant {
            Plant::Affine(p) => assert_eq!(p.vertices, vec![vec![-1.0], vec![1.0]]),
            _ => panic!("entry 15 is affine"),
        }
        let s15 = catalog_entry(15).unwrap().plant.to_switched().unwrap();
        let x = [0.4, -1.5];
        let f: Vec<Vec<f64>> = s15.modes.iter().map(|m| m.field.iter().map(|p| p.eval(&x).unwrap()).collect()).collect();
        assert_eq!(f, vec![vec![-1.5, -0.4 - 1.0], vec![-1.5, -0.4 + 1.0]]);
        let m20 = catalog_entry(20).unwrap();
        assert_eq!(m20.plant.variables().len(), 4);
        match &m20.defaults.template {
            crate::plant::TemplateSpec::Monomials(ms) => assert_eq!(ms.len(), 9),
            _ => panic!("entry 20 carries a template"),
        }
        assert_eq!(catalog_entry(10).unwrap().plant.to_switched().unwrap().modes.len(), 8);
    }

    #[test]
    fn heater_entries_match_generator() {
        let cases: [(u32, usize, Vec<Vec<usize>>); 5] = [
            (9, 3, vec![vec![0], vec![1], vec![2]]),
            (11, 4, (0..4).map(|i| vec![i]).collect()),
            (12, 5, (0..5).map(|i| vec![i]).collect()),
            (13, 6, (0..3).map(|i| vec![i, i + 3]).collect()),
            (14, 9, (0..3).map(|i| vec![i, i + 3, i + 6]).collect()),
        ];
        for (id, rooms, groups) in cases {
            let shipped = catalog_entry(id).unwrap().plant.to_switched().unwrap();
            let generated = heater_plant(rooms, &groups).unwrap();
            assert_eq!(shipped.modes.len(), generated.modes.len(), "entry {id}");
            assert_eq!(shipped.domain, generated.domain);
            assert_eq!(shipped.spec.target_radius, generated.spec.target_radius);
            for (a, b) in shipped.modes.iter().zip(&generated.modes) {
                assert_eq!(a.id, b.id);
                for (pa, pb) in a.field.iter().zip(&b.field) {
                    let d = pa.sub(pb);
                    assert!(d.max_abs_coeff() < 1e-12, "entry {id} mode {}: {d:?}", a.id);
                }
            }
        }
    }

    #[test]
    fn three_room_heater_matches_printed_equations() {
        // off mode at t = (1,2,3): 100 t1' = -10.5*22 + 5*23 + 5*24 + 5 = 9
        let p = heater_plant(3, &[vec![0]]).unwrap();
        assert!((p.modes[0].field[0].eval(&[1.0, 2.0, 3.0]).unwrap() - 0.09).abs() < 1e-12);
        // heated room 1: 100 t1' = -11.5*22 + 5*23 + 5*24 + 55 = 37
        assert!((p.modes[1].field[0].eval(&[1.0, 2.0, 3.0]).unwrap() - 0.37).abs() < 1e-12);
    }
}
