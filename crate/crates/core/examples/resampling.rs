// The five samplers on an imbalanced three-class set, and replaying a
// SMOTE row from its recorded origin.

use std::error::Error;

use crime_lab::resample::{resample, RowOrigin, SamplerKind, SamplerSpec};
use crime_lab::runner::SyntheticSpec;
use crime_lab::table::class_counts;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (x, y) = SyntheticSpec {
        counts: vec![300, 40, 8],
        dims: 2,
        spread: 0.12,
        seed: 3,
        background_noise: false,
    }
    .sample_points()?;
    println!("input: {:?}", class_counts(&y, 3));

    for kind in [
        SamplerKind::RandomOver,
        SamplerKind::RandomUnder,
        SamplerKind::Smote,
        SamplerKind::TomekLinks,
        SamplerKind::SmoteTomek,
    ] {
        let spec = SamplerSpec {
            seed: 99,
            ..SamplerSpec::new(kind)
        };
        let r = resample(&x, &y, 3, &spec)?;
        println!("{kind:?}: {:?}", class_counts(&r.y, 3));
        for w in &r.warnings {
            println!("  warning: {w}");
        }
    }

    let r = resample(
        &x,
        &y,
        3,
        &SamplerSpec {
            seed: 99,
            ..SamplerSpec::new(SamplerKind::Smote)
        },
    )?;
    let (i, origin) = r
        .origin
        .iter()
        .enumerate()
        .find(|(_, o)| matches!(o, RowOrigin::Synthetic { .. }))
        .ok_or("no synthetic rows")?;
    if let RowOrigin::Synthetic {
        base,
        neighbor,
        lambda,
    } = *origin
    {
        let replay: Vec<f64> = x
            .row(base)
            .iter()
            .zip(x.row(neighbor))
            .map(|(a, b)| a + lambda * (b - a))
            .collect();
        println!("row {i} = x[{base}] + {lambda:.3} * (x[{neighbor}] - x[{base}])");
        assert_eq!(replay, r.x.row(i));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
