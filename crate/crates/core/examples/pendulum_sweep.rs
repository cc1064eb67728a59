use std::time::Instant;
use tropikam::ingest::{action_kernel, LagrangianSpec};
use tropikam::minplus::min_mean_cycle;

fn main() {
    for n in [50, 100, 200] {
        let t = Instant::now();
        let k = action_kernel(&LagrangianSpec::pendulum(0.1, n, 10)).unwrap();
        let l = min_mean_cycle(k.matrix()).unwrap();
        println!("N={n} l={l:.17e} kernel+mmc {:?}", t.elapsed());
    }
}
