use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::templates::{fill, TEMPLATES};
use super::{
    Answer, Category, CompareKind, QAItem, QaError, Query, RelationAxis, DEFAULT_TOLERANCE,
};
use crate::geometry::{CameraFrame, Relation, RELATION_MARGIN};
use crate::scene::{Camera, PrimitiveClass, Scene, SceneObject};
use crate::scenegen::DEFAULT_PALETTE;

pub const QUESTIONS_PER_SCENE: usize = 8;

/// Relative volume gap below which a size comparison is too close to ask.
const SIZE_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaSet {
    pub items: Vec<QAItem>,
    /// One note per slot that fell back to an extra counting question.
    pub diagnostics: Vec<String>,
}

/// Answer phrase for a relation.
pub fn relation_phrase(r: Relation) -> &'static str {
    match r {
        Relation::LeftOf => "left of",
        Relation::RightOf => "right of",
        Relation::Above => "above",
        Relation::Below => "below",
        Relation::InFrontOf | Relation::CloserThan => "in front of",
        Relation::Behind | Relation::FartherThan => "behind",
    }
}

fn describe(o: &SceneObject) -> String {
    format!("{} {}", o.material, o.class_name.as_str())
}

fn plural(class: &str) -> String {
    match class {
        "torus" => "tori".to_string(),
        c if c.ends_with('s') || c.ends_with('x') || c.ends_with("ch") || c.ends_with("sh") => {
            format!("{c}es")
        }
        c => format!("{c}s"),
    }
}

/// Rotation-independent volume of the scaled local box.
fn box_volume(o: &SceneObject) -> f64 {
    let h = o.class_name.local_half_extents().mul_elem(o.scale);
    8.0 * h.x * h.y * h.z
}

fn seed_for(scene_id: &str, seed: u64) -> u64 {
    // FNV-1a over the id keeps streams distinct across scenes sharing a seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in scene_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

struct Ctx<'a> {
    scene: &'a Scene,
    frame: CameraFrame,
    rng: ChaCha8Rng,
    /// Indices of objects whose description is unique, in index order.
    unique: Vec<usize>,
    count_pool: Vec<Query>,
    used_counts: BTreeSet<usize>,
}

impl Ctx<'_> {
    fn desc(&self, i: usize) -> String {
        describe(&self.scene.objects[i])
    }

    fn count_item(&mut self, query: Query) -> (Category, String, Answer, Query) {
        let q = &TEMPLATES.questions;
        let objs = &self.scene.objects;
        let (text, n) = match &query {
            Query::CountAll => (q.count_total.clone(), objs.len()),
            Query::CountColor { color } => (
                fill(&q.count_color, &[("color", color)]),
                objs.iter().filter(|o| &o.material == color).count(),
            ),
            Query::CountClass { class_name } => (
                fill(&q.count_class, &[("class_plural", &plural(class_name))]),
                objs.iter()
                    .filter(|o| o.class_name.as_str() == class_name)
                    .count(),
            ),
            _ => unreachable!("counting queries only"),
        };
        (Category::Counting, text, Answer::Count(n as u64), query)
    }

    /// A counting question not asked yet, if any remain; otherwise any.
    fn fresh_count(&mut self) -> (Category, String, Answer, Query) {
        let free: Vec<usize> = (0..self.count_pool.len())
            .filter(|i| !self.used_counts.contains(i))
            .collect();
        let pick = match free.choose(&mut self.rng) {
            Some(&i) => i,
            None => self.rng.gen_range(0..self.count_pool.len()),
        };
        self.used_counts.insert(pick);
        let query = self.count_pool[pick].clone();
        self.count_item(query)
    }

    fn relation_candidates(&self) -> Vec<(usize, usize, RelationAxis, Relation)> {
        let mut out = Vec::new();
        for &a in &self.unique {
            for &b in &self.unique {
                if a == b {
                    continue;
                }
                let (oa, ob) = (&self.scene.objects[a], &self.scene.objects[b]);
                let (ca, cb) = (
                    self.frame.to_camera(oa.position),
                    self.frame.to_camera(ob.position),
                );
                let dx = ca.x - cb.x;
                if dx.abs() > RELATION_MARGIN {
                    let r = if dx < 0.0 {
                        Relation::LeftOf
                    } else {
                        Relation::RightOf
                    };
                    out.push((a, b, RelationAxis::Horizontal, r));
                }
                let dy = oa.position.y - ob.position.y;
                if dy.abs() > RELATION_MARGIN {
                    let r = if dy > 0.0 {
                        Relation::Above
                    } else {
                        Relation::Below
                    };
                    out.push((a, b, RelationAxis::Vertical, r));
                }
                let dz = ca.z - cb.z;
                if dz.abs() > RELATION_MARGIN {
                    let r = if dz < 0.0 {
                        Relation::InFrontOf
                    } else {
                        Relation::Behind
                    };
                    out.push((a, b, RelationAxis::Depth, r));
                }
            }
        }
        out
    }

    fn compare_candidates(&self, by: CompareKind) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (k, &a) in self.unique.iter().enumerate() {
            for &b in &self.unique[k + 1..] {
                let (oa, ob) = (&self.scene.objects[a], &self.scene.objects[b]);
                let winner = match by {
                    CompareKind::Larger => {
                        let (va, vb) = (box_volume(oa), box_volume(ob));
                        if (va - vb).abs() <= SIZE_MARGIN * va.max(vb) {
                            continue;
                        }
                        if va > vb {
                            a
                        } else {
                            b
                        }
                    }
                    CompareKind::Closer => {
                        let (da, db) =
                            (self.frame.depth(oa.position), self.frame.depth(ob.position));
                        if (da - db).abs() <= RELATION_MARGIN {
                            continue;
                        }
                        if da < db {
                            a
                        } else {
                            b
                        }
                    }
                };
                out.push((a, b, winner));
            }
        }
        out
    }
}

/// Eight questions per scene in a fixed category mix: two counting, two
/// existence, two relationship, one comparison and one localization. Slots
/// that cannot be filled unambiguously become extra counting questions and
/// are listed in `diagnostics`. The random stream is seeded from `seed` and
/// the scene id.
pub fn generate_qa(scene: &Scene, camera: &Camera, seed: u64) -> Result<QaSet, QaError> {
    if scene.objects.is_empty() {
        return Err(QaError::TooFewObjects(0));
    }
    camera
        .validate()
        .map_err(|e| QaError::Camera(e.to_string()))?;
    let objs = &scene.objects;

    let mut by_desc: BTreeMap<String, usize> = BTreeMap::new();
    for o in objs {
        *by_desc.entry(describe(o)).or_default() += 1;
    }
    let unique: Vec<usize> = (0..objs.len())
        .filter(|&i| by_desc[&describe(&objs[i])] == 1)
        .collect();

    let colors: BTreeSet<&str> = objs.iter().map(|o| o.material.as_str()).collect();
    let classes: BTreeSet<&str> = objs.iter().map(|o| o.class_name.as_str()).collect();
    let mut count_pool = vec![Query::CountAll];
    count_pool.extend(colors.iter().map(|c| Query::CountColor {
        color: c.to_string(),
    }));
    count_pool.extend(classes.iter().map(|c| Query::CountClass {
        class_name: c.to_string(),
    }));

    let mut ctx = Ctx {
        scene,
        frame: CameraFrame::new(camera),
        rng: ChaCha8Rng::seed_from_u64(seed_for(&scene.scene_id, seed)),
        unique,
        count_pool,
        used_counts: BTreeSet::new(),
    };
    let mut slots: Vec<(Category, String, Answer, Query)> = Vec::with_capacity(QUESTIONS_PER_SCENE);
    let mut diagnostics = Vec::new();
    let q = &TEMPLATES.questions;

    // counting: the total, then a sampled color or class
    ctx.used_counts.insert(0);
    slots.push(ctx.count_item(Query::CountAll));
    slots.push(ctx.fresh_count());

    // existence: one present pair, one absent pair
    let o = objs.choose(&mut ctx.rng).expect("non-empty");
    let (color, class) = (o.material.clone(), o.class_name.as_str().to_string());
    slots.push((
        Category::Existence,
        fill(&q.exists, &[("color", &color), ("class", &class)]),
        Answer::YesNo(true),
        Query::Exists {
            color,
            class_name: class,
        },
    ));
    let present: BTreeSet<(String, String)> = objs
        .iter()
        .map(|o| (o.material.clone(), o.class_name.as_str().to_string()))
        .collect();
    let mut palette: BTreeSet<&str> = DEFAULT_PALETTE.iter().copied().collect();
    palette.extend(colors.iter().copied());
    let mut class_pool: BTreeSet<&str> = classes.clone();
    if objs.iter().all(|o| o.class_name.is_primitive()) {
        class_pool.extend(PrimitiveClass::PRIMITIVES.iter().map(|c| c.as_str()));
    }
    let absent: Vec<(&str, &str)> = palette
        .iter()
        .flat_map(|c| class_pool.iter().map(move |k| (*c, *k)))
        .filter(|(c, k)| !present.contains(&(c.to_string(), k.to_string())))
        .collect();
    match absent.choose(&mut ctx.rng) {
        Some((color, class)) => slots.push((
            Category::Existence,
            fill(&q.exists, &[("color", color), ("class", class)]),
            Answer::YesNo(false),
            Query::Exists {
                color: color.to_string(),
                class_name: class.to_string(),
            },
        )),
        None => {
            diagnostics
                .push("existence: no absent color/class pair; counting substituted".to_string());
            slots.push(ctx.fresh_count());
        }
    }

    // relationship: two distinct (pair, axis) picks
    let mut rel = ctx.relation_candidates();
    rel.shuffle(&mut ctx.rng);
    let mut chosen: Vec<(usize, usize, RelationAxis, Relation)> = Vec::new();
    for c in &rel {
        if chosen.len() == 2 {
            break;
        }
        // prefer a different unordered pair for the second question
        let same_pair = chosen
            .iter()
            .any(|p| (p.0 == c.0 && p.1 == c.1) || (p.0 == c.1 && p.1 == c.0));
        if !same_pair {
            chosen.push(*c);
        }
    }
    for c in &rel {
        if chosen.len() == 2 {
            break;
        }
        if !chosen
            .iter()
            .any(|p| p.0 == c.0 && p.1 == c.1 && p.2 == c.2)
        {
            chosen.push(*c);
        }
    }
    for k in 0..2 {
        match chosen.get(k) {
            Some(&(a, b, axis, relation)) => {
                let template = match axis {
                    RelationAxis::Horizontal => &q.relation_horizontal,
                    RelationAxis::Vertical => &q.relation_vertical,
                    RelationAxis::Depth => &q.relation_depth,
                };
                let (da, db) = (ctx.desc(a), ctx.desc(b));
                slots.push((
                    Category::Relationship,
                    fill(template, &[("a", &da), ("b", &db)]),
                    Answer::Phrase(relation_phrase(relation).to_string()),
                    Query::Relation {
                        subject: da,
                        reference: db,
                        axis,
                        relation,
                    },
                ));
            }
            None => {
                diagnostics
                    .push("relationship: no unambiguous pair; counting substituted".to_string());
                slots.push(ctx.fresh_count());
            }
        }
    }

    // comparison: size or depth, falling back to the other kind
    let first = if ctx.rng.gen_bool(0.5) {
        CompareKind::Larger
    } else {
        CompareKind::Closer
    };
    let second = if first == CompareKind::Larger {
        CompareKind::Closer
    } else {
        CompareKind::Larger
    };
    let mut picked = None;
    for by in [first, second] {
        let cands = ctx.compare_candidates(by);
        if let Some(&(a, b, w)) = cands.choose(&mut ctx.rng) {
            picked = Some((a, b, w, by));
            break;
        }
    }
    match picked {
        Some((a, b, w, by)) => {
            // randomize which object is named first
            let (a, b) = if ctx.rng.gen_bool(0.5) {
                (a, b)
            } else {
                (b, a)
            };
            let template = match by {
                CompareKind::Larger => &q.compare_size,
                CompareKind::Closer => &q.compare_depth,
            };
            let (da, db) = (ctx.desc(a), ctx.desc(b));
            slots.push((
                Category::Comparison,
                fill(template, &[("a", &da), ("b", &db)]),
                Answer::Phrase(ctx.desc(w)),
                Query::Compare {
                    first: da,
                    second: db,
                    by,
                },
            ));
        }
        None => {
            diagnostics.push(
                "comparison: no pair separated by the margin; counting substituted".to_string(),
            );
            slots.push(ctx.fresh_count());
        }
    }

    // localization: a uniquely described object
    match ctx.unique.clone().choose(&mut ctx.rng) {
        Some(&i) => {
            let d = ctx.desc(i);
            slots.push((
                Category::Localization,
                fill(&q.localize, &[("a", &d)]),
                Answer::Point(objs[i].position),
                Query::Locate { object: d },
            ));
        }
        None => {
            diagnostics.push(
                "localization: no uniquely described object; counting substituted".to_string(),
            );
            slots.push(ctx.fresh_count());
        }
    }

    let items = slots
        .into_iter()
        .enumerate()
        .map(|(k, (category, question, gt_answer, query))| QAItem {
            scene_id: scene.scene_id.clone(),
            question_id: format!("{}_q{k}", scene.scene_id),
            category,
            question,
            gt_answer,
            tolerance: (category == Category::Localization).then_some(DEFAULT_TOLERANCE),
            query,
        })
        .collect();
    Ok(QaSet { items, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Vec3;
    use crate::scenegen::{generate_scene, GenConfig};

    #[test]
    fn eight_questions_in_fixed_mix() {
        let s = generate_scene(&GenConfig::new(1, 3)).unwrap();
        let set = generate_qa(&s, s.camera.as_ref().unwrap(), 0).unwrap();
        assert_eq!(set.items.len(), QUESTIONS_PER_SCENE);
        assert_eq!(set.items[0].question, "How many objects are in the scene?");
        assert_eq!(set.items[0].gt_answer, Answer::Count(3));
        assert!(set.items.iter().all(QAItem::is_well_formed));
        assert_eq!(set, generate_qa(&s, s.camera.as_ref().unwrap(), 0).unwrap());
    }

    #[test]
    fn identical_objects_trigger_substitution() {
        let o =
            SceneObject::new(PrimitiveClass::Cube, Vec3::new(0.0, 0.5, 0.0)).with_material("red");
        let mut p = o.clone();
        p.position.x = 2.0;
        let s = Scene::new("twins", vec![o, p]);
        let set = generate_qa(&s, &Camera::default(), 1).unwrap();
        assert_eq!(set.items.len(), 8);
        assert_eq!(set.diagnostics.len(), 4);
        assert_eq!(
            set.items
                .iter()
                .filter(|i| i.category == Category::Counting)
                .count(),
            6
        );
    }

    #[test]
    fn single_object_falls_back_to_counting() {
        let s = Scene::new(
            "one",
            vec![SceneObject::new(PrimitiveClass::Cube, Vec3::ZERO)],
        );
        let set = generate_qa(&s, &Camera::default(), 0).unwrap();
        assert_eq!(set.items.len(), 8);
        assert!(set.items.iter().all(QAItem::is_well_formed));
        assert!(set
            .items
            .iter()
            .all(|i| i.category != Category::Relationship));
        assert_eq!(
            generate_qa(&Scene::new("none", vec![]), &Camera::default(), 0),
            Err(QaError::TooFewObjects(0))
        );
    }

    #[test]
    fn plurals() {
        assert_eq!(plural("torus"), "tori");
        assert_eq!(plural("box"), "boxes");
        assert_eq!(plural("cube"), "cubes");
    }
}
