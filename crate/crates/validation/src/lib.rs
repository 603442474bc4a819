//! Holds the `acceptance` test target. Run it with
//! `cargo test -p helmns-validation --test acceptance`.
