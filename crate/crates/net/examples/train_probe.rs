use groupsod_net::*;
use groupsod_tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let lr: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let batch: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(4);
    // 16 synthetic-like samples (same generator as groupsod-data, but built
    // inline to keep this probe dependency-light): use random blobs.
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let mut samples = Vec::new();
    for _ in 0..16 {
        let s = 64usize;
        let mut rgb = vec![0.0; 3*s*s];
        let mut depth = vec![0.0; s*s];
        let mut gt = vec![0.0; s*s];
        let cx = rng.random_range(16.0..48.0);
        let cy = rng.random_range(16.0..48.0);
        let r1 = rng.random_range(6.0..14.0);
        let r2 = rng.random_range(6.0..14.0);
        let base: [f64;3] = [rng.random_range(0.2..0.6), rng.random_range(0.2..0.6), rng.random_range(0.2..0.6)];
        let hot = rng.random_range(0..3usize);
        for y in 0..s { for x in 0..s {
            let p = y*s+x;
            let inside = ((x as f64 +0.5-cx)/r1).powi(2) + ((y as f64+0.5-cy)/r2).powi(2) <= 1.0;
            for c in 0..3 { rgb[c*s*s+p] = (base[c] + rng.random_range(-0.05..0.05)).clamp(0.0,1.0); }
            depth[p] = (0.2 + rng.random_range(-0.05..0.05f64)).clamp(0.0,0.45);
            if inside {
                for c in 0..3 { rgb[c*s*s+p] = if c==hot {0.9} else {0.15}; }
                depth[p] = 0.85;
                gt[p] = 1.0;
            }
        }}
        samples.push(TrainSample {
            rgb: Tensor::new(vec![3,s,s], rgb).unwrap(),
            depth: Tensor::new(vec![1,s,s], depth).unwrap(),
            gt: Tensor::new(vec![1,s,s], gt).unwrap(),
        });
    }
    let mut net = Net::init(ModelConfig::toy(), seed).unwrap();
    let mut adam = AdamState::new(&net.store);
    let cfg = TrainConfig { epochs: 300, batch_size: batch, lr, lr_decay_factor: 0.1, lr_decay_period: 120, seed, augment: false };
    let t0 = std::time::Instant::now();
    for epoch in 0..cfg.epochs {
        let rep = train_epoch(&mut net, &mut adam, &samples, &cfg, epoch).unwrap();
        if epoch % 5 == 0 || epoch < 5 {
            let mae = eval_train_mae(&net, &samples).unwrap();
            println!("epoch={} loss={:.4} mae={:.4} t={:.0}s", epoch, rep.mean_loss, mae, t0.elapsed().as_secs_f64());
            if mae < 0.05 { println!("REACHED mae<0.05 at epoch {} in {:.0}s", epoch, t0.elapsed().as_secs_f64()); return; }
        }
    }
    println!("NOT reached in 300 epochs");
}
