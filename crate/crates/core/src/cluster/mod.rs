//! Word clustering: K-means over word vectors and Brown clustering over raw
//! word bigrams. Both yield a hard word → class map used by the histogram
//! features.

mod brown;
mod kmeans;

pub use brown::{brown_assign, brown_fit, brown_fit_with, brown_quality, BrownModel, Merge};
pub use kmeans::{
    kmeans_assign, kmeans_fit, kmeans_fit_full, kmeans_fit_restarts, sum_squared_error, KMeansFit,
    KMeansModel,
};
