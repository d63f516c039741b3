//! Configs compiled into the binary.

pub const BUILTIN: &[(&str, &str)] = &[
    ("quadratic_identity", include_str!("../configs/quadratic_identity.toml")),
    ("quadratic_linear", include_str!("../configs/quadratic_linear.toml")),
    ("quadratic_lse", include_str!("../configs/quadratic_lse.toml")),
    ("log_n2_alpha1", include_str!("../configs/log_n2_alpha1.toml")),
    (
        "log_n1_half_log_two",
        include_str!("../configs/log_n1_half_log_two.toml"),
    ),
    ("log_n2_alpha_half", include_str!("../configs/log_n2_alpha_half.toml")),
    ("log_n3_alpha2", include_str!("../configs/log_n3_alpha2.toml")),
    ("convex_cosh", include_str!("../configs/convex_cosh.toml")),
    ("convex_quartic", include_str!("../configs/convex_quartic.toml")),
    (
        "entropic_three_state",
        include_str!("../configs/entropic_three_state.toml"),
    ),
    ("kl_divergence", include_str!("../configs/kl_divergence.toml")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> String {
    BUILTIN.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}
