use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    None,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::None => v,
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-v).exp()),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::None => T::one(),
            Activation::Tanh => T::one() - y * y,
            Activation::Sigmoid => y * (T::one() - y),
        }
    }

    pub fn apply_in_place<T: Scalar>(self, data: &mut [T]) {
        if self != Activation::None {
            data.iter_mut().for_each(|v| *v = self.apply(*v));
        }
    }

    /// `grad *= f'(pre)` given the stored outputs.
    pub fn backprop_in_place<T: Scalar>(self, outputs: &[T], grad: &mut [T]) {
        if self != Activation::None {
            grad.iter_mut()
                .zip(outputs)
                .for_each(|(g, &y)| *g = *g * self.derivative_from_output(y));
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::None => "none",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}
