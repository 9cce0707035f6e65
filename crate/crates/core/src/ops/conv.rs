//! Dilated (atrous) 2-d convolution via im2col + GEMM.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Stride, dilation (the atrous rate) and zero padding of one convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub stride: usize,
    pub dilation: usize,
    pub padding: usize,
}

impl ConvGeometry {
    pub fn new(stride: usize, dilation: usize, padding: usize) -> Result<Self> {
        if stride == 0 || dilation == 0 {
            return Err(Error::geometry(format!(
                "stride ({stride}) and dilation ({dilation}) must be at least 1"
            )));
        }
        Ok(Self {
            stride,
            dilation,
            padding,
        })
    }

    /// Padding `d * (k - 1) / 2` that keeps the spatial size at stride 1.
    pub fn same(kernel: usize, stride: usize, dilation: usize) -> Result<Self> {
        if kernel.is_multiple_of(2) {
            return Err(Error::geometry(format!(
                "same padding needs an odd kernel, got {kernel}"
            )));
        }
        Self::new(stride, dilation, dilation * (kernel - 1) / 2)
    }

    /// Footprint of a `kernel`-tap axis: `d * (k - 1) + 1` pixels.
    pub fn extent(&self, kernel: usize) -> usize {
        self.dilation * (kernel - 1) + 1
    }

    /// Output length along one axis, or an error when the dilated kernel
    /// does not fit inside the padded input.
    pub fn output_len(&self, input: usize, kernel: usize) -> Result<usize> {
        let padded = input + 2 * self.padding;
        let extent = self.extent(kernel);
        if padded < extent {
            return Err(Error::geometry(format!(
                "kernel extent {extent} exceeds padded input {padded}"
            )));
        }
        Ok((padded - extent) / self.stride + 1)
    }
}

/// Weights `[Cout, Cin, kH, kW]`, bias `[Cout]` and geometry of one convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams<T = f32> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub geometry: ConvGeometry,
}

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> ConvParams<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>, geometry: ConvGeometry) -> Result<Self> {
        validate_params(&weight, &bias)?;
        Ok(Self {
            weight,
            bias,
            geometry,
        })
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        conv2d_forward(input, &self.weight, &self.bias, self.geometry)
    }

    pub fn backward(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
        conv2d_backward(input, &self.weight, &self.bias, self.geometry, grad_out)
    }
}

fn validate_params<T: Real>(weight: &Tensor<T>, bias: &Tensor<T>) -> Result<(usize, usize, usize, usize)> {
    let (cout, cin, kh, kw) = weight.dims4()?;
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::geometry(format!("kernel {kh}x{kw} must be odd")));
    }
    if bias.shape() != [cout] {
        return Err(Error::shape(format!(
            "bias shape {:?} does not match {cout} output channels",
            bias.shape()
        )));
    }
    Ok((cout, cin, kh, kw))
}

struct Plan {
    n: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    ho: usize,
    wo: usize,
    geom: ConvGeometry,
}

impl Plan {
    fn build<T: Real>(
        input: &Tensor<T>,
        weight: &Tensor<T>,
        bias: &Tensor<T>,
        geom: ConvGeometry,
    ) -> Result<Self> {
        let (n, cin, h, w) = input.dims4()?;
        let (cout, wcin, kh, kw) = validate_params(weight, bias)?;
        if wcin != cin {
            return Err(Error::shape(format!(
                "input has {cin} channels, weight expects {wcin}"
            )));
        }
        let ho = geom.output_len(h, kh)?;
        let wo = geom.output_len(w, kw)?;
        Ok(Self {
            n,
            cin,
            h,
            w,
            cout,
            kh,
            kw,
            ho,
            wo,
            geom,
        })
    }

    fn patch_len(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn out_area(&self) -> usize {
        self.ho * self.wo
    }

    /// Source coordinate of output position `o` under tap `k`, if inside the image.
    fn source(&self, o: usize, k: usize, len: usize) -> Option<usize> {
        let pos = (o * self.geom.stride + k * self.geom.dilation) as isize - self.geom.padding as isize;
        (pos >= 0 && (pos as usize) < len).then_some(pos as usize)
    }

    /// Unfolds one image `[Cin, H, W]` into `[Cin*kH*kW, Ho*Wo]`.
    fn im2col<T: Real>(&self, image: &[T], col: &mut [T]) {
        let area = self.out_area();
        let mut row = 0;
        for ci in 0..self.cin {
            let plane = &image[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let dst = &mut col[row * area..(row + 1) * area];
                    for oy in 0..self.ho {
                        let line = &mut dst[oy * self.wo..(oy + 1) * self.wo];
                        match self.source(oy, ky, self.h) {
                            None => line.fill(T::zero()),
                            Some(iy) => {
                                let src = &plane[iy * self.w..(iy + 1) * self.w];
                                for (ox, v) in line.iter_mut().enumerate() {
                                    *v = match self.source(ox, kx, self.w) {
                                        Some(ix) => src[ix],
                                        None => T::zero(),
                                    };
                                }
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }

    /// Adjoint of [`Plan::im2col`]: scatters-and-adds columns back into an image.
    fn col2im<T: Real>(&self, col: &[T], image: &mut [T]) {
        let area = self.out_area();
        let mut row = 0;
        for ci in 0..self.cin {
            let plane = &mut image[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let src = &col[row * area..(row + 1) * area];
                    for oy in 0..self.ho {
                        let Some(iy) = self.source(oy, ky, self.h) else {
                            continue;
                        };
                        let line = &src[oy * self.wo..(oy + 1) * self.wo];
                        let dst = &mut plane[iy * self.w..(iy + 1) * self.w];
                        for (ox, &v) in line.iter().enumerate() {
                            if let Some(ix) = self.source(ox, kx, self.w) {
                                dst[ix] += v;
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Convolution of an NCHW batch. Taps that fall outside the image read zero.
pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    geom: ConvGeometry,
) -> Result<Tensor<T>> {
    let plan = Plan::build(input, weight, bias, geom)?;
    let (k, area) = (plan.patch_len(), plan.out_area());
    let mut out = Tensor::zeros(&[plan.n, plan.cout, plan.ho, plan.wo]);
    let mut col = vec![T::zero(); k * area];
    let in_stride = plan.cin * plan.h * plan.w;
    let out_stride = plan.cout * area;
    for b in 0..plan.n {
        plan.im2col(&input.data()[b * in_stride..(b + 1) * in_stride], &mut col);
        let dst = &mut out.data_mut()[b * out_stride..(b + 1) * out_stride];
        for (c, &bv) in bias.data().iter().enumerate() {
            dst[c * area..(c + 1) * area].fill(bv);
        }
        T::gemm(
            plan.cout,
            k,
            area,
            T::one(),
            weight.data(),
            (k as isize, 1),
            &col,
            (area as isize, 1),
            T::one(),
            dst,
            (area as isize, 1),
        );
    }
    Ok(out)
}

/// Exact gradients of [`conv2d_forward`]; the input gradient is the
/// transposed (adjoint) convolution of `grad_out`.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    geom: ConvGeometry,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let plan = Plan::build(input, weight, bias, geom)?;
    let expected = [plan.n, plan.cout, plan.ho, plan.wo];
    if grad_out.shape() != expected {
        return Err(Error::shape(format!(
            "grad_out shape {:?}, forward output is {expected:?}",
            grad_out.shape()
        )));
    }
    let (k, area) = (plan.patch_len(), plan.out_area());
    let mut grad_input = Tensor::zeros_like(input);
    let mut grad_weight = Tensor::zeros_like(weight);
    let mut grad_bias = Tensor::zeros_like(bias);
    let mut col = vec![T::zero(); k * area];
    let mut grad_col = vec![T::zero(); k * area];
    let in_stride = plan.cin * plan.h * plan.w;
    let out_stride = plan.cout * area;

    for b in 0..plan.n {
        let g = &grad_out.data()[b * out_stride..(b + 1) * out_stride];
        for (c, gb) in grad_bias.data_mut().iter_mut().enumerate() {
            *gb += g[c * area..(c + 1) * area].iter().copied().sum::<T>();
        }

        plan.im2col(&input.data()[b * in_stride..(b + 1) * in_stride], &mut col);
        // dW += G · colᵀ
        T::gemm(
            plan.cout,
            area,
            k,
            T::one(),
            g,
            (area as isize, 1),
            &col,
            (1, area as isize),
            T::one(),
            grad_weight.data_mut(),
            (k as isize, 1),
        );
        // dcol = Wᵀ · G
        T::gemm(
            k,
            plan.cout,
            area,
            T::one(),
            weight.data(),
            (1, k as isize),
            g,
            (area as isize, 1),
            T::zero(),
            &mut grad_col,
            (area as isize, 1),
        );
        plan.col2im(
            &grad_col,
            &mut grad_input.data_mut()[b * in_stride..(b + 1) * in_stride],
        );
    }

    Ok(ConvGrads {
        input: grad_input,
        weight: grad_weight,
        bias: grad_bias,
    })
}
