//! Insertion curves with AUC, cascading randomization sanity checks and
//! runtime measurement.

mod insertion;
mod sanity;
mod similarity;
mod timing;

pub use insertion::{
    auc, insertion_curve, insertion_curve_for_order, rank_by_lime, rank_by_saliency, InsertionCurve,
};
pub use sanity::{sanity_check, MetricSummary, SanityOptions, SanityReport, SanityRow};
pub use similarity::{
    hog_features, hog_pearson, mid_ranks, pearson, spearman, ssim, HOG_BINS, HOG_CELL, SSIM_K1, SSIM_K2, SSIM_SIGMA,
    SSIM_WINDOW,
};
pub use timing::{time_explainer, TimingStats};
