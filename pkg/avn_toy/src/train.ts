/** Full-batch training loop minimizing the squared-error heatmap loss. */

import * as tf from '@tensorflow/tfjs';

export interface TrainResult {
  losses: number[];
}

export function mseLoss(pred: tf.Tensor, target: tf.Tensor): tf.Scalar {
  return pred.sub(target).square().mean();
}

/**
 * pairs: [rgb (H, W, 3) in [0,1], target (G_H, G_W, V*A)].
 * Deterministic for a fixed model seed; throws on a non-finite loss.
 */
export function train(
  model: tf.LayersModel,
  pairs: { x: tf.Tensor3D; y: tf.Tensor3D }[],
  epochs: number,
  learningRate = 3e-3
): TrainResult {
  if (pairs.length === 0) throw new Error('need at least one training pair');
  const xs = tf.stack(pairs.map((p) => p.x)) as tf.Tensor4D;
  const ys = tf.stack(pairs.map((p) => p.y)) as tf.Tensor4D;
  const optimizer = tf.train.adam(learningRate);
  const losses: number[] = [];
  for (let epoch = 0; epoch < epochs; epoch++) {
    const lossVal = optimizer.minimize(
      () => mseLoss(model.predict(xs) as tf.Tensor, ys),
      true
    ) as tf.Scalar;
    const v = lossVal.dataSync()[0];
    lossVal.dispose();
    if (!Number.isFinite(v)) {
      throw new Error(`non-finite loss at epoch ${epoch}`);
    }
    losses.push(v);
  }
  xs.dispose();
  ys.dispose();
  optimizer.dispose();
  return { losses };
}
