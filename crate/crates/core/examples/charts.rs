//! Round trips through the blow-up charts at random hub points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twofold_lab::charts::{chart_transform, round_trip_error, sample_hub, Chart, ChartPoint};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let hub = sample_hub(&mut rng);
    println!("hub point {hub:?}");
    for chart in Chart::ALL {
        match ChartPoint::from_hub(chart, hub) {
            Ok(p) => {
                let back = chart_transform(&p, Chart::ALL[0]).map(|q| q.coords);
                println!("  {chart:?}: {:?} -> first chart {back:?}", p.coords);
            }
            Err(e) => println!("  {chart:?}: {e}"),
        }
    }
    let worst = (0..10_000).map(|_| round_trip_error(sample_hub(&mut rng))).fold(0.0, f64::max);
    println!("largest relative round-trip error over 10000 draws: {worst:.2e}");
}
