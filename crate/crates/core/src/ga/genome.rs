use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::nn::{Activation, Architecture, LayerSpec, BATCH_SIZES, EPOCH_RANGE, LAYER_RANGE, NODE_COUNTS};

/// Uniform draw over every hyperparameter set; depth first, then layers.
pub fn sample_genome<R: Rng + ?Sized>(rng: &mut R) -> Architecture {
    let epochs = rng.random_range(EPOCH_RANGE);
    let batch_size = *BATCH_SIZES.choose(rng).unwrap();
    let depth = rng.random_range(LAYER_RANGE);
    let layers = (0..depth)
        .map(|_| LayerSpec::new(*NODE_COUNTS.choose(rng).unwrap(), *Activation::ALL.choose(rng).unwrap()))
        .collect();
    Architecture { epochs, batch_size, layers }
}

fn pick<'a, T, R: Rng + ?Sized>(rng: &mut R, a: &'a T, b: &'a T) -> &'a T {
    if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

/// Epochs, batch size and depth each come from a random parent. Layer `i`
/// comes from layer `i` of a random parent; past the shallower parent's depth
/// the choice is between the deeper parent's layer `i` and the shallower
/// parent's last layer.
pub fn crossover<R: Rng + ?Sized>(a: &Architecture, b: &Architecture, rng: &mut R) -> Architecture {
    let epochs = *pick(rng, &a.epochs, &b.epochs);
    let batch_size = *pick(rng, &a.batch_size, &b.batch_size);
    let depth = pick(rng, a, b).depth();
    let (deep, shallow) = if a.depth() >= b.depth() { (a, b) } else { (b, a) };
    let layers = (0..depth)
        .map(|i| {
            if i < shallow.depth() {
                *pick(rng, &a.layers[i], &b.layers[i])
            } else {
                *pick(rng, &deep.layers[i], shallow.layers.last().unwrap())
            }
        })
        .collect();
    Architecture { epochs, batch_size, layers }
}

/// Independent shuffles of node counts and activations across the child's
/// layers, applied only when the child is deeper than one of its parents.
pub fn mutate<R: Rng + ?Sized>(
    child: &Architecture,
    parents: (&Architecture, &Architecture),
    rng: &mut R,
) -> Architecture {
    if child.depth() <= parents.0.depth().min(parents.1.depth()) {
        return child.clone();
    }
    let mut nodes: Vec<usize> = child.layers.iter().map(|l| l.nodes).collect();
    let mut acts: Vec<Activation> = child.layers.iter().map(|l| l.activation).collect();
    nodes.shuffle(rng);
    acts.shuffle(rng);
    Architecture { layers: nodes.into_iter().zip(acts).map(|(n, a)| LayerSpec::new(n, a)).collect(), ..child.clone() }
}
