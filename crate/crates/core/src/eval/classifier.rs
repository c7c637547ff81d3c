use crate::baselines::{HoeffdingTree, SoftTree};
use crate::error::Result;
use crate::scalar::{convert_slice, Scalar};
use crate::sohot::SoHoTree;

/// Common face of every learner for the evaluation loop. Inputs and outputs
/// are `f64` regardless of the model's scalar type.
pub trait Classifier: Send {
    fn input_dim(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn learn_one(&mut self, x: &[f64], y: usize) -> Result<()>;
    fn node_count(&self) -> usize;
    /// Norm of the loss gradient with respect to the model output at the last
    /// training step, for differentiable models.
    fn grad_norm(&self) -> Option<f64> {
        None
    }
    /// Important-feature counts of the decision rules `x` visits, for models
    /// with oblique gates.
    fn transparency_counts(&self, _x: &[f64]) -> Option<Result<Vec<usize>>> {
        None
    }
    fn dump(&self) -> String;
}

fn to_f64<F: Scalar>(v: Vec<F>) -> Vec<f64> {
    v.into_iter().map(Scalar::to_f64_lossy).collect()
}

impl<F: Scalar> Classifier for SoHoTree<F> {
    fn input_dim(&self) -> usize {
        SoHoTree::input_dim(self)
    }

    fn n_classes(&self) -> usize {
        SoHoTree::n_classes(self)
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        SoHoTree::predict_proba(self, &convert_slice::<F>(x)).map(to_f64)
    }

    fn learn_one(&mut self, x: &[f64], y: usize) -> Result<()> {
        self.train_step(&convert_slice::<F>(x), y).map(|_| ())
    }

    fn node_count(&self) -> usize {
        self.arena().node_count()
    }

    fn grad_norm(&self) -> Option<f64> {
        self.diagnostics().last_grad_output_norm.map(Scalar::to_f64_lossy)
    }

    fn transparency_counts(&self, x: &[f64]) -> Option<Result<Vec<usize>>> {
        Some(SoHoTree::transparency_counts(self, &convert_slice::<F>(x)))
    }

    fn dump(&self) -> String {
        SoHoTree::dump(self)
    }
}

impl<F: Scalar> Classifier for SoftTree<F> {
    fn input_dim(&self) -> usize {
        SoftTree::input_dim(self)
    }

    fn n_classes(&self) -> usize {
        SoftTree::n_classes(self)
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        SoftTree::predict_proba(self, &convert_slice::<F>(x)).map(to_f64)
    }

    fn learn_one(&mut self, x: &[f64], y: usize) -> Result<()> {
        self.train_step(&convert_slice::<F>(x), y).map(|_| ())
    }

    fn node_count(&self) -> usize {
        self.arena().node_count()
    }

    fn grad_norm(&self) -> Option<f64> {
        self.diagnostics().last_grad_output_norm.map(Scalar::to_f64_lossy)
    }

    fn transparency_counts(&self, x: &[f64]) -> Option<Result<Vec<usize>>> {
        Some(SoftTree::transparency_counts(self, &convert_slice::<F>(x)))
    }

    fn dump(&self) -> String {
        SoftTree::dump(self)
    }
}

impl<F: Scalar> Classifier for HoeffdingTree<F> {
    fn input_dim(&self) -> usize {
        HoeffdingTree::input_dim(self)
    }

    fn n_classes(&self) -> usize {
        HoeffdingTree::n_classes(self)
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        HoeffdingTree::predict_proba(self, &convert_slice::<F>(x)).map(to_f64)
    }

    fn learn_one(&mut self, x: &[f64], y: usize) -> Result<()> {
        HoeffdingTree::learn_one(self, &convert_slice::<F>(x), y)
    }

    fn node_count(&self) -> usize {
        HoeffdingTree::node_count(self)
    }

    fn dump(&self) -> String {
        HoeffdingTree::dump(self)
    }
}

impl Classifier for Box<dyn Classifier> {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).predict_proba(x)
    }

    fn learn_one(&mut self, x: &[f64], y: usize) -> Result<()> {
        (**self).learn_one(x, y)
    }

    fn node_count(&self) -> usize {
        (**self).node_count()
    }

    fn grad_norm(&self) -> Option<f64> {
        (**self).grad_norm()
    }

    fn transparency_counts(&self, x: &[f64]) -> Option<Result<Vec<usize>>> {
        (**self).transparency_counts(x)
    }

    fn dump(&self) -> String {
        (**self).dump()
    }
}
