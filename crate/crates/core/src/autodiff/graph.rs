use super::tensor::{gemm, Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub padding: usize,
    pub h_out: usize,
    pub w_out: usize,
}

impl ConvGeom {
    pub fn new(input: &[usize], kernel: &[usize], stride: usize, padding: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidArgument("conv2d stride must be positive".into()));
        }
        let (&[c_in, h, w], &[c_out, kc, kh, kw]) = (input, kernel) else {
            return Err(Error::InvalidShape(format!(
                "conv2d expects C×H×W input and O×C×kH×kW kernel, got {input:?} and {kernel:?}"
            )));
        };
        if kc != c_in {
            return Err(Error::InvalidShape(format!(
                "conv2d kernel has {kc} input channels, input has {c_in}"
            )));
        }
        if kh > h + 2 * padding || kw > w + 2 * padding {
            return Err(Error::InvalidShape(format!(
                "conv2d kernel {kh}×{kw} larger than padded input {}×{}",
                h + 2 * padding,
                w + 2 * padding
            )));
        }
        Ok(Self {
            c_in,
            h,
            w,
            c_out,
            kh,
            kw,
            stride,
            padding,
            h_out: (h + 2 * padding - kh) / stride + 1,
            w_out: (w + 2 * padding - kw) / stride + 1,
        })
    }

    fn patch_len(&self) -> usize {
        self.c_in * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.h_out * self.w_out
    }

    /// Visits every (column row, output position, input offset) triple whose
    /// input pixel lies inside the unpadded image.
    #[inline]
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, usize)) {
        let p = self.positions();
        for c in 0..self.c_in {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (c * self.kh + ki) * self.kw + kj;
                    for oy in 0..self.h_out {
                        let iy = (oy * self.stride + ki) as isize - self.padding as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        for ox in 0..self.w_out {
                            let ix = (ox * self.stride + kj) as isize - self.padding as isize;
                            if ix < 0 || ix >= self.w as isize {
                                continue;
                            }
                            let src = (c * self.h + iy as usize) * self.w + ix as usize;
                            f(row * p, oy * self.w_out + ox, src);
                        }
                    }
                }
            }
        }
    }
}

enum Op<T> {
    Leaf,
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Var,
        geom: ConvGeom,
        cols: Vec<T>,
    },
    Dense {
        input: Var,
        weight: Var,
        bias: Var,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine {
        x: Var,
        scale: T,
    },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Square(Var),
    ChannelMul {
        features: Var,
        mask: Var,
    },
    Softmax(Var),
    LogSoftmax(Var),
    Sum(Var),
    Index {
        x: Var,
        index: usize,
    },
    Concat(Vec<Var>),
    Slice {
        x: Var,
        offset: usize,
    },
}

struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Tape of operations recorded in topological order.
///
/// A graph is single-use: [`Graph::backward`] may be called once.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    consumed: bool,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by one backward pass, indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every node recorded after the first `len`. Handles to dropped
    /// nodes become invalid.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op<T>, requires_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<T> {
        &self.nodes[v.0]
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a leaf holding a copy of `t`; it receives a gradient when
    /// `t.requires_grad()`.
    pub fn leaf(&mut self, t: &Tensor<T>) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec(), Op::Leaf, t.requires_grad())
    }

    pub fn param(&mut self, shape: &[usize], data: Vec<T>) -> Result<Var> {
        let t = Tensor::new(shape, data)?;
        Ok(self.push(t.shape().to_vec(), t.into_data(), Op::Leaf, true))
    }

    pub fn constant(&mut self, shape: &[usize], data: Vec<T>) -> Result<Var> {
        let t = Tensor::new(shape, data)?;
        Ok(self.push(t.shape().to_vec(), t.into_data(), Op::Leaf, false))
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        let n = self.node(v);
        Tensor::new(&n.shape, n.value.clone()).expect("node shape is valid")
    }

    pub fn item(&self, v: Var) -> T {
        self.node(v).value[0]
    }

    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Var, stride: usize, padding: usize) -> Result<Var> {
        let geom = ConvGeom::new(self.shape(input), self.shape(kernel), stride, padding)?;
        if self.shape(bias) != [geom.c_out] {
            return Err(Error::InvalidShape(format!(
                "conv2d bias shape {:?}, expected [{}]",
                self.shape(bias),
                geom.c_out
            )));
        }
        let p = geom.positions();
        let mut cols = vec![T::zero(); geom.patch_len() * p];
        {
            let x = self.value(input);
            geom.for_each_tap(|row, pos, src| cols[row + pos] = x[src]);
        }
        let mut out = vec![T::zero(); geom.c_out * p];
        for (o, b) in self.value(bias).iter().enumerate() {
            out[o * p..(o + 1) * p].fill(*b);
        }
        gemm(
            false,
            false,
            geom.c_out,
            geom.patch_len(),
            p,
            self.value(kernel),
            &cols,
            &mut out,
            true,
        );
        let rg = self.rg(input) || self.rg(kernel) || self.rg(bias);
        let cols = if self.rg(kernel) { cols } else { Vec::new() };
        Ok(self.push(
            vec![geom.c_out, geom.h_out, geom.w_out],
            out,
            Op::Conv2d {
                input,
                kernel,
                bias,
                geom,
                cols,
            },
            rg,
        ))
    }

    /// `y = W·flatten(x) + b`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let n = self.value(input).len();
        let &[m, wn] = self.shape(weight) else {
            return Err(Error::InvalidShape(format!(
                "dense weight must be M×N, got {:?}",
                self.shape(weight)
            )));
        };
        if wn != n || self.shape(bias) != [m] {
            return Err(Error::InvalidShape(format!(
                "dense: weight {:?}, bias {:?}, input of {n} elements",
                self.shape(weight),
                self.shape(bias)
            )));
        }
        let mut out = self.value(bias).to_vec();
        gemm(
            false,
            false,
            m,
            n,
            1,
            self.value(weight),
            self.value(input),
            &mut out,
            true,
        );
        let rg = self.rg(input) || self.rg(weight) || self.rg(bias);
        Ok(self.push(vec![m], out, Op::Dense { input, weight, bias }, rg))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::InvalidShape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    fn binary(&mut self, a: Var, b: Var, what: &str, f: impl Fn(T, T) -> T, op: Op<T>) -> Result<Var> {
        self.same_shape(a, b, what)?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(self.shape(a).to_vec(), out, op, rg))
    }

    fn unary(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let out = self.value(x).iter().map(|&v| f(v)).collect();
        let rg = self.rg(x);
        self.push(self.shape(x).to_vec(), out, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// `y = scale·x + shift`.
    pub fn affine(&mut self, x: Var, scale: T, shift: T) -> Var {
        self.unary(x, |v| scale * v + shift, Op::Affine { x, scale })
    }

    pub fn scale(&mut self, x: Var, scale: T) -> Var {
        self.affine(x, scale, T::zero())
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        self.affine(x, -T::one(), T::one())
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| if v > T::zero() { v } else { T::zero() }, Op::Relu(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(x, |v| v * v, Op::Square(x))
    }

    /// Multiplies a `C×H×W` map by a `1×H×W` map replicated over channels.
    pub fn broadcast_mul_channelwise(&mut self, features: Var, mask: Var) -> Result<Var> {
        let fs = self.shape(features);
        let ms = self.shape(mask);
        if fs.len() != 3 || ms.len() != 3 || ms[0] != 1 || fs[1..] != ms[1..] {
            return Err(Error::InvalidShape(format!(
                "channelwise mul needs C×H×W and 1×H×W, got {fs:?} and {ms:?}"
            )));
        }
        let plane = fs[1] * fs[2];
        let m = self.value(mask);
        let out = self
            .value(features)
            .chunks(plane)
            .flat_map(|ch| ch.iter().zip(m).map(|(&f, &w)| f * w))
            .collect();
        let rg = self.rg(features) || self.rg(mask);
        Ok(self.push(fs.to_vec(), out, Op::ChannelMul { features, mask }, rg))
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let out = softmax(self.value(x))?;
        let rg = self.rg(x);
        Ok(self.push(self.shape(x).to_vec(), out, Op::Softmax(x), rg))
    }

    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        if v.is_empty() {
            return Err(Error::EmptyInput("log_softmax"));
        }
        let max = v.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = v.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
        let out = v.iter().map(|&z| z - lse).collect();
        let rg = self.rg(x);
        Ok(self.push(self.shape(x).to_vec(), out, Op::LogSoftmax(x), rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().copied().sum();
        let rg = self.rg(x);
        self.push(vec![1], vec![s], Op::Sum(x), rg)
    }

    pub fn index(&mut self, x: Var, index: usize) -> Result<Var> {
        let v = *self.value(x).get(index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "index {index} out of range for {} elements",
                self.value(x).len()
            ))
        })?;
        let rg = self.rg(x);
        Ok(self.push(vec![1], vec![v], Op::Index { x, index }, rg))
    }

    /// Concatenates along the leading axis; trailing dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or(Error::EmptyInput("concat"))?;
        let tail = self.shape(*first)[1..].to_vec();
        let mut lead = 0;
        for &p in parts {
            let s = self.shape(p);
            if s[1..] != tail[..] {
                return Err(Error::InvalidShape(format!(
                    "concat trailing dims {:?} vs {tail:?}",
                    &s[1..]
                )));
            }
            lead += s[0];
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        let mut shape = vec![lead];
        shape.extend(tail);
        Ok(self.push(shape, out, Op::Concat(parts.to_vec()), rg))
    }

    /// Takes `len` entries of the leading axis starting at `start`.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(x);
        if len == 0 || start + len > s[0] {
            return Err(Error::InvalidArgument(format!(
                "slice {start}..{} of leading dim {}",
                start + len,
                s[0]
            )));
        }
        let inner: usize = s[1..].iter().product();
        let mut shape = s.to_vec();
        shape[0] = len;
        let out = self.value(x)[start * inner..(start + len) * inner].to_vec();
        let rg = self.rg(x);
        Ok(self.push(
            shape,
            out,
            Op::Slice {
                x,
                offset: start * inner,
            },
            rg,
        ))
    }

    /// Reverse-mode sweep from a scalar `loss`. Every leaf that requires a
    /// gradient gets one (zeros when unreachable).
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        if self.value(loss).len() != 1 {
            return Err(Error::NonScalarLoss(self.shape(loss).to_vec()));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<T>>> = Vec::new();
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let Some(dy) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let mut acc = Accum {
                grads: &mut grads,
                nodes: &self.nodes,
            };
            let y = &node.value;
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(dy);
                    continue;
                }
                Op::Conv2d {
                    input,
                    kernel,
                    bias,
                    geom,
                    cols,
                } => {
                    let p = geom.positions();
                    let k = geom.patch_len();
                    if let Some(db) = acc.buf(*bias) {
                        for (o, b) in db.iter_mut().enumerate() {
                            *b = *b + dy[o * p..(o + 1) * p].iter().copied().sum();
                        }
                    }
                    if let Some(dk) = acc.buf(*kernel) {
                        gemm(false, true, geom.c_out, p, k, &dy, cols, dk, true);
                    }
                    if self.nodes[input.0].requires_grad {
                        let mut dcols = vec![T::zero(); k * p];
                        gemm(
                            true,
                            false,
                            k,
                            geom.c_out,
                            p,
                            &self.nodes[kernel.0].value,
                            &dy,
                            &mut dcols,
                            false,
                        );
                        let dx = acc.buf(*input).expect("input requires grad");
                        geom.for_each_tap(|row, pos, src| dx[src] = dx[src] + dcols[row + pos]);
                    }
                }
                Op::Dense { input, weight, bias } => {
                    let m = dy.len();
                    let n = self.nodes[input.0].value.len();
                    if let Some(db) = acc.buf(*bias) {
                        add_into(db, &dy);
                    }
                    if let Some(dw) = acc.buf(*weight) {
                        gemm(false, false, m, 1, n, &dy, &self.nodes[input.0].value, dw, true);
                    }
                    if let Some(dx) = acc.buf(*input) {
                        gemm(true, false, n, m, 1, &self.nodes[weight.0].value, &dy, dx, true);
                    }
                }
                Op::Add(a, b) => {
                    if let Some(da) = acc.buf(*a) {
                        add_into(da, &dy);
                    }
                    if let Some(db) = acc.buf(*b) {
                        add_into(db, &dy);
                    }
                }
                Op::Sub(a, b) => {
                    if let Some(da) = acc.buf(*a) {
                        add_into(da, &dy);
                    }
                    if let Some(db) = acc.buf(*b) {
                        db.iter_mut().zip(&dy).for_each(|(g, &d)| *g = *g - d);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    if let Some(da) = acc.buf(*a) {
                        for ((g, &d), &o) in da.iter_mut().zip(&dy).zip(bv) {
                            *g = *g + d * o;
                        }
                    }
                    if let Some(db) = acc.buf(*b) {
                        for ((g, &d), &o) in db.iter_mut().zip(&dy).zip(av) {
                            *g = *g + d * o;
                        }
                    }
                }
                Op::Affine { x, scale } => {
                    if let Some(dx) = acc.buf(*x) {
                        dx.iter_mut().zip(&dy).for_each(|(g, &d)| *g = *g + *scale * d);
                    }
                }
                Op::Sigmoid(x) => {
                    if let Some(dx) = acc.buf(*x) {
                        for ((g, &d), &s) in dx.iter_mut().zip(&dy).zip(y) {
                            *g = *g + d * s * (T::one() - s);
                        }
                    }
                }
                Op::Tanh(x) => {
                    if let Some(dx) = acc.buf(*x) {
                        for ((g, &d), &t) in dx.iter_mut().zip(&dy).zip(y) {
                            *g = *g + d * (T::one() - t * t);
                        }
                    }
                }
                Op::Relu(x) => {
                    if let Some(dx) = acc.buf(*x) {
                        for ((g, &d), &o) in dx.iter_mut().zip(&dy).zip(y) {
                            if o > T::zero() {
                                *g = *g + d;
                            }
                        }
                    }
                }
                Op::Square(x) => {
                    let xv = &self.nodes[x.0].value;
                    if let Some(dx) = acc.buf(*x) {
                        let two = T::from_f64(2.0);
                        for ((g, &d), &v) in dx.iter_mut().zip(&dy).zip(xv) {
                            *g = *g + two * v * d;
                        }
                    }
                }
                Op::ChannelMul { features, mask } => {
                    let fv = &self.nodes[features.0].value;
                    let mv = &self.nodes[mask.0].value;
                    let plane = mv.len();
                    if let Some(df) = acc.buf(*features) {
                        for (c, chunk) in df.chunks_mut(plane).enumerate() {
                            let dyc = &dy[c * plane..(c + 1) * plane];
                            for ((g, &d), &m) in chunk.iter_mut().zip(dyc).zip(mv) {
                                *g = *g + d * m;
                            }
                        }
                    }
                    if let Some(dm) = acc.buf(*mask) {
                        for (c, dyc) in dy.chunks(plane).enumerate() {
                            let fc = &fv[c * plane..(c + 1) * plane];
                            for ((g, &d), &f) in dm.iter_mut().zip(dyc).zip(fc) {
                                *g = *g + d * f;
                            }
                        }
                    }
                }
                Op::Softmax(x) => {
                    let dot: T = dy.iter().zip(y).map(|(&d, &s)| d * s).sum();
                    if let Some(dx) = acc.buf(*x) {
                        for ((g, &d), &s) in dx.iter_mut().zip(&dy).zip(y) {
                            *g = *g + s * (d - dot);
                        }
                    }
                }
                Op::LogSoftmax(x) => {
                    let total: T = dy.iter().copied().sum();
                    if let Some(dx) = acc.buf(*x) {
                        for ((g, &d), &l) in dx.iter_mut().zip(&dy).zip(y) {
                            *g = *g + d - l.exp() * total;
                        }
                    }
                }
                Op::Sum(x) => {
                    if let Some(dx) = acc.buf(*x) {
                        dx.iter_mut().for_each(|g| *g = *g + dy[0]);
                    }
                }
                Op::Index { x, index } => {
                    if let Some(dx) = acc.buf(*x) {
                        dx[*index] = dx[*index] + dy[0];
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].value.len();
                        if let Some(dp) = acc.buf(p) {
                            add_into(dp, &dy[offset..offset + len]);
                        }
                        offset += len;
                    }
                }
                Op::Slice { x, offset } => {
                    if let Some(dx) = acc.buf(*x) {
                        add_into(&mut dx[*offset..*offset + dy.len()], &dy);
                    }
                }
            }
        }

        for (i, node) in self.nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) && node.requires_grad && grads[i].is_none() {
                grads[i] = Some(vec![T::zero(); node.value.len()]);
            }
        }
        Ok(Gradients { grads })
    }
}

struct Accum<'a, T> {
    grads: &'a mut Vec<Option<Vec<T>>>,
    nodes: &'a [Node<T>],
}

impl<T: Real> Accum<'_, T> {
    /// Gradient buffer for `v`, or `None` when `v` needs no gradient.
    fn buf(&mut self, v: Var) -> Option<&mut Vec<T>> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        Some(self.grads[v.0].get_or_insert_with(|| vec![T::zero(); node.value.len()]))
    }
}

fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    dst.iter_mut().zip(src).for_each(|(a, &b)| *a = *a + b);
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    // Branching keeps exp from overflowing for large |x|.
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Max-shifted softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Result<Vec<T>> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("softmax"));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

impl<T: Real> Graph<T> {
    /// Fails when any element of `v` is NaN or infinite.
    pub fn check_finite(&self, v: Var, what: &str) -> Result<()> {
        if self.value(v).iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }
}
