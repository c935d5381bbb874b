use gomimo::channel::{build_channel_matrix, ArrayLayout, OpticsParams, ReceiverLocation};
use gomimo::detectors::SpatialRule;
use gomimo::harness::{report, run_ber_sweep, run_timing_benchmark, BerCurve, SweepConfig};
use gomimo::modulation::SchemeKind;
use gomimo::neural::{fit, NetworkFlavor, TrainConfig};
use gomimo::{ChannelMatrix, Detector, GomimoScheme};

fn channel(location: ReceiverLocation) -> ChannelMatrix {
    let g = ArrayLayout::table1().geometry(location).unwrap();
    build_channel_matrix(&g, &OpticsParams::table1()).unwrap()
}

fn small_sweep(threads: usize) -> SweepConfig {
    let mut c = SweepConfig::new(vec![130.0, 136.0, 142.0], 12_000, 5);
    c.chunk_size = 1_000;
    c.min_errors = 150;
    c.threads = threads;
    c
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let scheme = GomimoScheme::standard(SchemeKind::Gosmp);
    let h = channel(ReceiverLocation::Center);
    let d = Detector::joint_ml(&h, &scheme);
    let one = run_ber_sweep(&scheme, &h, &d, &small_sweep(1)).unwrap();
    for threads in [2, 3, 8] {
        assert_eq!(run_ber_sweep(&scheme, &h, &d, &small_sweep(threads)).unwrap(), one, "{threads} threads");
    }
    // early stop fires at a chunk boundary once enough errors are in
    assert!(one[0].vectors < 12_000 && one[0].vectors.is_multiple_of(1_000));
    assert!(one[0].errors >= 150);
}

#[test]
fn csv_output_is_byte_identical_across_runs() {
    let scheme = GomimoScheme::standard(SchemeKind::Gosm);
    let h = channel(ReceiverLocation::Corner);
    let d = Detector::zf_ml(&h, &scheme, SpatialRule::Energy).unwrap();
    let render = |threads| {
        let points = run_ber_sweep(&scheme, &h, &d, &small_sweep(threads)).unwrap();
        let curve = BerCurve {
            detector: "zf_ml".into(),
            scheme: SchemeKind::Gosm,
            location: "corner".into(),
            points,
        };
        let mut buf = Vec::new();
        report::write_ber_sweep(&mut buf, &[curve]).unwrap();
        buf
    };
    let a = render(1);
    assert_eq!(a, render(1));
    assert_eq!(a, render(4));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 4);
}

#[test]
fn noise_floor_is_censored_and_bits_add_up() {
    let scheme = GomimoScheme::standard(SchemeKind::Gosmp);
    let h = channel(ReceiverLocation::Center);
    let d = Detector::joint_ml(&h, &scheme);
    let cfg = SweepConfig::new(vec![200.0], 3_000, 1);
    let p = run_ber_sweep(&scheme, &h, &d, &cfg).unwrap()[0];
    assert!(p.censored);
    assert_eq!((p.errors, p.ber), (0, 0.0));
    assert_eq!(p.vectors, 3_000);
    assert_eq!(p.bits, 3_000 * 6);
}

#[test]
fn timing_benchmark_counts_match_the_sweep() {
    let scheme = GomimoScheme::standard(SchemeKind::Gosm);
    let h = channel(ReceiverLocation::Center);
    let detectors = [
        Detector::joint_ml(&h, &scheme),
        Detector::zf_ml(&h, &scheme, SpatialRule::Energy).unwrap(),
    ];
    let mut cfg = SweepConfig::new(vec![138.0], 5_000, 11);
    cfg.chunk_size = 2_000;
    cfg.min_errors = u64::MAX;
    let reports = run_timing_benchmark(&scheme, &h, &detectors, 138.0, 5_000, 2_000, 11).unwrap();
    for (d, r) in detectors.iter().zip(&reports) {
        let p = run_ber_sweep(&scheme, &h, d, &cfg).unwrap()[0];
        assert_eq!(r.detector, d.kind());
        assert_eq!(r.bit_errors, p.errors);
        assert_eq!(r.vectors, 5_000);
        assert!(r.wall_seconds > 0.0);
    }
}

#[test]
fn training_is_reproducible_and_learns_the_codebook() {
    let scheme = GomimoScheme::standard(SchemeKind::Gosm);
    let h = channel(ReceiverLocation::Center);
    let location = ReceiverLocation::Center;
    let mut cfg = TrainConfig::preset(SchemeKind::Gosm, &location).unwrap();
    cfg.train_size = 20_000;
    cfg.validation_size = 5_000;
    cfg.epochs = 3;
    let a = fit(&scheme, &h, &location, &cfg).unwrap();
    let b = fit(&scheme, &h, &location, &cfg).unwrap();
    assert_eq!(a.outcome.log, b.outcome.log);
    assert_eq!(a.outcome.params, b.outcome.params);

    for flavor in [NetworkFlavor::Blind, NetworkFlavor::Zf] {
        let fitted = fit(&scheme, &h, &location, &TrainConfig { flavor, ..cfg.clone() }).unwrap();
        let d = fitted.detector().unwrap();
        for (frame, x) in scheme.enumerate_codebook().entries() {
            assert_eq!(d.detect(&h.apply(x)).unwrap(), *frame, "{flavor:?}");
        }
    }
}
