pub mod oracle;
pub mod properties;
pub mod random_wm;
pub mod scenarios;
