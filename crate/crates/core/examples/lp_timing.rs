//! Times joint LP detection at N = 32 for the two antenna setups.

use std::time::Instant;

use pdcch_jlp::jlp_detector::JlpDetector;
use pdcch_jlp::modem_channel::{transmit_codeword, ChannelConfig, TxMode};
use pdcch_jlp::polar_code::{encode, PolarCodeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = PolarCodeSpec::new(5, 16, 0, 0.5).unwrap();
    let det = JlpDetector::new(&spec);
    let setups = [
        ("4x4 SM", ChannelConfig { n_tx: 4, n_rx: 4, snr_db: 4.0, alpha: 1.0, mode: TxMode::SpatialMultiplexing }),
        ("4x1 TD", ChannelConfig { n_tx: 4, n_rx: 1, snr_db: 4.0, alpha: 1.0, mode: TxMode::TransmitDiversity }),
    ];
    let trials = 200;
    for (name, cfg) in setups {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut iters = 0;
        let mut frac = 0.0;
        let start = Instant::now();
        for t in 0..trials {
            let cw: Vec<u8> = if t % 2 == 0 {
                let info: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2)).collect();
                encode(&spec, &info).unwrap()
            } else {
                (0..32).map(|_| rng.random_range(0..2)).collect()
            };
            let (obs, map, _) = transmit_codeword(&cw, &cfg, &mut rng).unwrap();
            let res = det.detect(&obs, &map).unwrap();
            iters += res.iterations;
            frac += res.f;
        }
        let dt = start.elapsed().as_secs_f64() / trials as f64;
        println!(
            "{name}: {:.2} ms/LP, {:.0} pivots/LP, mean f {:.2}",
            dt * 1e3,
            iters as f64 / trials as f64,
            frac / trials as f64
        );
    }
}
