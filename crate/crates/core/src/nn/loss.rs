use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax - onehot) / batch`. The loss is accumulated in `f64`.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(f64, Tensor<T>)> {
    let &[batch, classes] = logits.shape() else {
        return Err(Error::ShapeMismatch {
            expected: vec![labels.len(), 0],
            actual: logits.shape().to_vec(),
        });
    };
    if labels.len() != batch {
        return Err(Error::CountMismatch {
            what: "labels in batch".into(),
            expected: batch,
            found: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: classes,
        });
    }
    let scale = 1.0 / batch as f64;
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(batch * classes);
    for (row, &label) in logits.data().chunks_exact(classes).zip(labels) {
        let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
        let sum: f64 = row.iter().map(|v| (v.as_f64() - max).exp()).sum();
        let log_norm = max + sum.ln();
        total += log_norm - row[label].as_f64();
        for (j, v) in row.iter().enumerate() {
            let p = (v.as_f64() - log_norm).exp();
            let target = if j == label { 1.0 } else { 0.0 };
            grad.push(T::of((p - target) * scale));
        }
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::non_finite("cross-entropy loss"));
    }
    Ok((loss, Tensor::new(vec![batch, classes], grad)?))
}

/// Index of the largest logit per row; ties resolve to the lowest index.
pub fn argmax_rows<T: Scalar>(logits: &Tensor<T>) -> Vec<usize> {
    let classes = logits.shape().last().copied().unwrap_or(1);
    logits
        .data()
        .chunks_exact(classes)
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate().skip(1) {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_k() {
        for k in [2usize, 3, 10, 100] {
            let logits = Tensor::<f64>::zeros(vec![4, k]);
            let (loss, _) = cross_entropy(&logits, &[0, 1, 0, 1]).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn two_class_hand_value() {
        let logits = Tensor::new(vec![1, 2], vec![0.0f64, 3f64.ln()]).unwrap();
        let (loss, grad) = cross_entropy(&logits, &[1]).unwrap();
        assert!((loss - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((grad.data()[0] - 0.25).abs() < 1e-15);
        assert!((grad.data()[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn confident_margin_drives_loss_to_zero() {
        let mut last = f64::INFINITY;
        for margin in [1.0, 10.0, 100.0, 1000.0] {
            let logits = Tensor::new(vec![1, 3], vec![margin, 0.0f64, 0.0]).unwrap();
            let (loss, _) = cross_entropy(&logits, &[0]).unwrap();
            assert!(loss <= last && loss >= 0.0);
            last = loss;
        }
        assert!(last < 1e-300);
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let logits = Tensor::new(vec![2, 3], vec![0.3f32, -1.0, 2.0, 5.0, 5.0, -3.0]).unwrap();
        let (_, grad) = cross_entropy(&logits, &[2, 0]).unwrap();
        for row in grad.data().chunks(3) {
            assert!(row.iter().sum::<f32>().abs() < 1e-7);
        }
    }

    #[test]
    fn label_out_of_range() {
        let logits = Tensor::<f64>::zeros(vec![1, 3]);
        assert!(matches!(
            cross_entropy(&logits, &[3]),
            Err(Error::LabelOutOfRange { label: 3, num_classes: 3 })
        ));
    }

    #[test]
    fn argmax_ties_pick_lowest_index() {
        let logits = Tensor::new(vec![2, 3], vec![1.0f64, 2.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(argmax_rows(&logits), vec![1, 0]);
    }
}
