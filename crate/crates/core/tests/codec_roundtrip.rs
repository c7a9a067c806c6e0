use std::time::{Duration, Instant};

use proptest::prelude::*;
use scenecode_core::codecs::{
    self, object_mismatch, phase1_quality_filter, serialize, strip_code_fences, FilterOutcome,
    SceneCodeLanguage,
};
use scenecode_core::scene::{PrimitiveClass, Scene, SceneObject, Vec3};
use scenecode_core::scenegen::{generate_scene, GenConfig};

fn generated() -> Vec<Scene> {
    let mut out = Vec::new();
    for tier in 1..=5u8 {
        for seed in 0..40u64 {
            out.push(generate_scene(&GenConfig::new(tier, seed)).expect("feasible"));
        }
    }
    out
}

#[test]
fn every_language_round_trips_generated_scenes() {
    for scene in generated() {
        for lang in SceneCodeLanguage::ALL {
            let text = serialize(lang, &scene).unwrap();
            let out = codecs::parse(lang, &text);
            let back = out
                .scene
                .unwrap_or_else(|| panic!("{lang} {}: {:?}", scene.scene_id, out.diagnostics));
            if let Some(m) = object_mismatch(&scene, &back, 1e-6) {
                panic!("{lang} {}: {m}\n{text}", scene.scene_id);
            }
            let cam = scene.camera.unwrap();
            let got = back.camera.unwrap_or_else(|| panic!("{lang}: camera lost"));
            assert!(cam.position.max_abs_diff(got.position) < 1e-6, "{lang}");
            assert!(cam.target.max_abs_diff(got.target) < 1e-6, "{lang}");
            assert!((cam.fov - got.fov).abs() < 1e-6, "{lang}");
        }
    }
}

#[test]
fn serialization_is_deterministic() {
    let scene = generate_scene(&GenConfig::new(3, 7)).unwrap();
    for lang in SceneCodeLanguage::ALL {
        assert_eq!(
            serialize(lang, &scene).unwrap(),
            serialize(lang, &scene).unwrap()
        );
    }
}

#[test]
fn canonical_json_scene_ids_survive() {
    let scene = generate_scene(&GenConfig::new(1, 3)).unwrap();
    for lang in [
        SceneCodeLanguage::CanonicalJson,
        SceneCodeLanguage::SceneDsl,
    ] {
        let back = codecs::parse(lang, &serialize(lang, &scene).unwrap())
            .scene
            .unwrap();
        assert_eq!(back.scene_id, scene.scene_id);
    }
}

#[test]
fn generated_threejs_passes_the_quality_filter() {
    for scene in generated() {
        let text = serialize(SceneCodeLanguage::ThreeJs, &scene).unwrap();
        assert_eq!(
            phase1_quality_filter(&text),
            FilterOutcome::Accept,
            "{}",
            scene.scene_id
        );
    }
}

#[test]
fn fenced_output_parses_like_bare_output() {
    let scene = generate_scene(&GenConfig::new(2, 1)).unwrap();
    for lang in SceneCodeLanguage::ALL {
        let text = serialize(lang, &scene).unwrap();
        let fenced = format!(
            "Here is the scene:\n```{}\n{text}```\nDone.",
            lang.file_extension()
        );
        assert_eq!(
            codecs::parse(lang, &fenced).scene,
            codecs::parse(lang, &text).scene,
            "{lang}"
        );
    }
}

#[test]
fn box_fallback_keeps_free_form_classes() {
    let scene = Scene::new(
        "indoor",
        vec![
            SceneObject::new(
                PrimitiveClass::Other("bathtub".into()),
                Vec3::new(1.0, 0.3, 2.0),
            )
            .with_scale(Vec3::new(1.6, 0.6, 0.8))
            .with_material("walnut"),
            SceneObject::new(
                PrimitiveClass::Other("floor lamp".into()),
                Vec3::new(-1.0, 0.8, 0.0),
            ),
        ],
    );
    let opts = codecs::SerializeOptions { box_fallback: true };
    for lang in SceneCodeLanguage::ALL {
        let text = codecs::serialize_with(lang, &scene, opts).unwrap();
        let back = codecs::parse(lang, &text).scene.unwrap();
        assert_eq!(object_mismatch(&scene, &back, 1e-9), None, "{lang}\n{text}");
    }
    let strict = [
        SceneCodeLanguage::ThreeJs,
        SceneCodeLanguage::UnityCsharp,
        SceneCodeLanguage::BlenderPython,
        SceneCodeLanguage::Open3dPython,
    ];
    for lang in strict {
        assert!(matches!(
            serialize(lang, &scene),
            Err(codecs::CodecError::ClassNotRepresentable { .. })
        ));
    }
}

const HOSTILE: &[&str] = &[
    "while(true){}",
    "for(;;){ scene.add(new THREE.Mesh(g, m)); }",
    "$(rm -rf /); `reboot`; os.system('ls') && echo hi | sh",
    "import os\nos.system('rm -rf /')\nexec(open('x').read())",
    "((((((((((((((((((((((((((((((((((((((((((((((((((((((",
    "\"unterminated string\n'another",
    "/* never closed",
    "{\"objects\": [{\"class_name\": \"cube\", \"position\": [1e308, 1e308, 1e308]}]}",
];

fn assert_bounded(lang: SceneCodeLanguage, input: &str) {
    let start = Instant::now();
    let out = codecs::parse(lang, input);
    assert!(
        start.elapsed() < Duration::from_secs(2),
        "{lang} took {:?}",
        start.elapsed()
    );
    assert_eq!(
        out.parsed_object_count,
        out.scene.as_ref().map_or(0, |s| s.objects.len())
    );
}

#[test]
fn hostile_inputs_are_inert() {
    for lang in SceneCodeLanguage::ALL {
        for h in HOSTILE {
            assert_bounded(lang, h);
        }
        assert_bounded(lang, &"(".repeat(100_000));
        assert_bounded(lang, &"-".repeat(100_000));
        assert_bounded(lang, &"x = (1 + (2 * (3 - 4))) ;\n".repeat(5_000));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,400}") {
        for lang in SceneCodeLanguage::ALL {
            assert_bounded(lang, &s);
        }
    }

    #[test]
    fn code_like_text_never_panics(s in "[a-zA-Z0-9_.(){}\\[\\];=,'\"#/* \\n-]{0,300}") {
        for lang in SceneCodeLanguage::ALL {
            assert_bounded(lang, &s);
        }
    }

    #[test]
    fn fence_stripping_is_idempotent(s in "(```[a-z]{0,4}\\n)?[a-z \\n`]{0,80}(```)?[a-z \\n]{0,20}") {
        let once = strip_code_fences(&s);
        prop_assert_eq!(strip_code_fences(&once), once);
    }

    #[test]
    fn random_scenes_round_trip(tier in 1u8..=5, seed in 1000u64..2000) {
        let scene = generate_scene(&GenConfig::new(tier, seed)).unwrap();
        for lang in SceneCodeLanguage::ALL {
            let back = codecs::parse(lang, &serialize(lang, &scene).unwrap()).scene.unwrap();
            prop_assert_eq!(object_mismatch(&scene, &back, 1e-6), None);
        }
    }
}
