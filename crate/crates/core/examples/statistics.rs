//! One-way ANOVA and Welch's t-test on small hand-made samples.
//!
//!     cargo run --example statistics

use crosswalk_ir::evaluation::{one_way_anova, stars, welch_t_test};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let no_ehmi = [10.2, 9.8, 11.0, 10.5, 9.6];
    let fixed = [9.1, 8.7, 9.5, 8.9, 9.8];
    let ir = [7.9, 8.4, 7.2, 8.1, 7.7];

    let a = one_way_anova(&[&no_ehmi, &fixed, &ir])?;
    println!("ANOVA  F({}, {}) = {:.3}, p = {:.2e} {}", a.df_between, a.df_within, a.f, a.p, stars(a.p));
    for (name, x, y) in [("none vs fixed", &no_ehmi, &fixed), ("fixed vs ir", &fixed, &ir), ("none vs ir", &no_ehmi, &ir)] {
        let t = welch_t_test(x, y)?;
        println!("{name:<14} t({:.2}) = {:>6.3}, p = {:.4} {}", t.df, t.t, t.p, stars(t.p));
    }
    Ok(())
}
