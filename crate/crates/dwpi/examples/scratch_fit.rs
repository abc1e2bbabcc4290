use dwpi::agents::{train_dwmotq, AgentHyperparams};
use dwpi::analysis::{accuracy_known_front, cdst_value_set, compute_ccs, corner_weights, region_of};
use dwpi::demos::{build_dataset, eval_feature, Representation, SuboptimalParams};
use dwpi::env::{default_env, EnvKind};
use dwpi::inference::{infer, train_dwpi, DwpiTrainConfig};
use dwpi::RngStream;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args[1].parse().unwrap();
    let lr: f64 = args[2].parse().unwrap();
    let h: usize = args[3].parse().unwrap();
    let bs: usize = args[4].parse().unwrap();
    let seed: u64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(42);

    let env = default_env(EnvKind::Cdst);
    let weights = dwpi::discretize_simplex(2, 0.01).unwrap();
    let part = corner_weights(&compute_ccs(&cdst_value_set(env.map()).unwrap()).unwrap()).unwrap();
    let params = SuboptimalParams::default();
    let hp = AgentHyperparams::tabular_default();

    let root = RngStream::new(seed);
    let agent = train_dwmotq(env.as_ref(), &weights, &hp, &mut root.split("agent")).unwrap();
    let ds = build_dataset(&agent, env.as_ref(), &weights, 0.5, 50, Representation::Reward, &params, &root.split("demos")).unwrap();
    let eval_rng = root.split("eval");
    let mut feats = Vec::new();
    for (i, w) in weights.iter().enumerate() {
        feats.push(eval_feature(&agent, env.as_ref(), w, 100, 0.5, Representation::Reward, &params, &eval_rng.split_indexed("w", i as u64)).unwrap());
    }
    let cfg = DwpiTrainConfig { hidden: vec![h, h], epochs, learning_rate: lr, learning_rate_end: lr, batch_size: bs, subset_mean_augmentation: true };
    let t0 = std::time::Instant::now();
    let model = train_dwpi(&ds, &cfg, vec![false, false], &mut root.split("dwpi")).unwrap();
    let dt = t0.elapsed();
    let mut inferred = Vec::new();
    for f in &feats { inferred.push(infer(&model, f).unwrap()); }
    let acc = accuracy_known_front(&inferred, &weights, &part).unwrap();
    let errs: Vec<f64> = weights.iter().zip(&inferred).filter(|(w, inf)| region_of(w, &part) != region_of(inf, &part)).map(|(w, _)| w.values()[0]).collect();
    println!("AUG seed{seed} h{h} e{epochs} lr{lr} bs{bs}: acc {acc:.4} errs {errs:?} model {dt:?}");
}
