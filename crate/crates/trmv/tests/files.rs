use trmv::dataset::{checksum, load_dataset, save_dataset};
use trmv_core::datagen::{OverlayParams, ProcedureAParams, SamplingParams};
use trmv_core::GeneratorParams;

#[test]
fn datasets_roundtrip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let sampling = SamplingParams {
        samples: 12,
        train_samples: 7,
        ..SamplingParams::default()
    };
    let gens = [
        GeneratorParams::ProcedureA(ProcedureAParams {
            sampling: sampling.clone(),
            rho_c: 0.4,
            sigma: 0.1,
            input_grid: 9,
            output_grid: 5,
            ..ProcedureAParams::default()
        }),
        GeneratorParams::Overlay(OverlayParams {
            sampling,
            points: 13,
            ..OverlayParams::default()
        }),
    ];
    for (k, params) in gens.iter().enumerate() {
        let d = params.generate(11).unwrap();
        let path = dir.path().join(k.to_string());
        let manifest = save_dataset(&path, &d).unwrap();
        assert_eq!(manifest.train, (0..7).collect::<Vec<_>>());
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, d);
        assert_eq!(checksum(&back).unwrap(), checksum(&d).unwrap());
    }
    let a = gens[0].generate(11).unwrap();
    let b = gens[0].generate(12).unwrap();
    assert_ne!(checksum(&a).unwrap(), checksum(&b).unwrap());
}

#[test]
fn inconsistent_directories_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = GeneratorParams::Overlay(OverlayParams {
        sampling: SamplingParams {
            samples: 6,
            train_samples: 3,
            ..SamplingParams::default()
        },
        points: 5,
        ..OverlayParams::default()
    })
    .generate(0)
    .unwrap();
    save_dataset(dir.path(), &d).unwrap();
    let other = trmv_core::DenseTensor::zeros(&[5, 6]).unwrap();
    trmv::io::save_tensor(&dir.path().join("x1.tnsr"), &other).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert_eq!(err.kind(), trmv::ExitKind::Data);
}
