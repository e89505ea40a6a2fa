use proptest::prelude::*;
use svtcp_core::tensor::DEFAULT_PRODUCT_BUDGET;
use svtcp_core::DenseTensor;

fn tensor_strategy(max_order: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
    (2..=max_order, 1..=max_dim).prop_flat_map(|(m, n)| {
        prop::collection::vec(-3.0f64..3.0, n.pow(m as u32))
            .prop_map(move |data| DenseTensor::from_vec(m, n, data).unwrap())
    })
}

fn tensor_and_vector() -> impl Strategy<Value = (DenseTensor, Vec<f64>)> {
    tensor_strategy(4, 4).prop_flat_map(|b| {
        let n = b.dim();
        (Just(b), prop::collection::vec(-2.0f64..2.0, n))
    })
}

/// Direct summation over every index tuple.
fn naive_contraction(b: &DenseTensor, v: &[f64]) -> Vec<f64> {
    let n = b.dim();
    let m = b.order();
    let mut out = vec![0.0; n];
    for (flat, &x) in b.entries().iter().enumerate() {
        let mut rest = flat;
        let mut idx = vec![0; m];
        for slot in idx.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        out[idx[0]] += x * idx[1..].iter().map(|&j| v[j]).product::<f64>();
    }
    out
}

fn digits(mut flat: usize, n: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
    out
}

/// `c_{j a_1 .. a_{q-1}} = sum a_{j j_2 .. j_q} b_{j_2 a_1} .. b_{j_q a_{q-1}}`
/// with each `a_t` a multi-index of length `k - 1`, by exhaustive loops.
fn naive_shao(a: &DenseTensor, b: &DenseTensor) -> Vec<f64> {
    let n = a.dim();
    let q = a.order();
    let k = b.order();
    let out_order = (q - 1) * (k - 1) + 1;
    let mut out = vec![0.0; n.pow(out_order as u32)];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = digits(flat, n, out_order);
        let j = idx[0];
        let alphas: Vec<&[usize]> = (0..q - 1)
            .map(|t| &idx[1 + t * (k - 1)..1 + (t + 1) * (k - 1)])
            .collect();
        let mut sum = 0.0;
        for inner in 0..n.pow((q - 1) as u32) {
            let js = digits(inner, n, q - 1);
            let mut a_idx = vec![j];
            a_idx.extend(&js);
            let mut term = a.get(&a_idx).unwrap();
            for (t, &jt) in js.iter().enumerate() {
                let mut b_idx = vec![jt];
                b_idx.extend(alphas[t]);
                term *= b.get(&b_idx).unwrap();
            }
            sum += term;
        }
        *slot = sum;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn contraction_is_homogeneous((b, v) in tensor_and_vector(), t in 0.0f64..4.0) {
        let base = b.contract_to_vector(&v).unwrap();
        let tv: Vec<f64> = v.iter().map(|x| t * x).collect();
        let scaled = b.contract_to_vector(&tv).unwrap();
        let factor = t.powi(b.order() as i32 - 1);
        for (s, x) in scaled.iter().zip(&base) {
            let expect = factor * x;
            prop_assert!((s - expect).abs() <= 1e-10 * (1.0 + expect.abs()), "{s} vs {expect}");
        }
    }

    #[test]
    fn scalar_matches_vector_contraction((b, v) in tensor_and_vector()) {
        let s = b.contract_to_scalar(&v).unwrap();
        let w = b.contract_to_vector(&v).unwrap();
        let d: f64 = v.iter().zip(&w).map(|(a, c)| a * c).sum();
        prop_assert!((s - d).abs() <= 1e-10 * (1.0 + s.abs()));
    }

    #[test]
    fn contraction_matches_direct_summation((b, v) in tensor_and_vector()) {
        let w = b.contract_to_vector(&v).unwrap();
        for (x, y) in w.iter().zip(naive_contraction(&b, &v)) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn contraction_is_linear_in_the_tensor(
        (b1, v) in tensor_and_vector(),
        seed in prop::collection::vec(-3.0f64..3.0, 256),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let b2 = DenseTensor::from_vec(b1.order(), b1.dim(), seed[..b1.entries().len()].to_vec()).unwrap();
        let combo = b1.scaled(alpha).add_scaled(&b2, beta).unwrap();
        let lhs = combo.contract_to_vector(&v).unwrap();
        let r1 = b1.contract_to_vector(&v).unwrap();
        let r2 = b2.contract_to_vector(&v).unwrap();
        for i in 0..v.len() {
            let rhs = alpha * r1[i] + beta * r2[i];
            prop_assert!((lhs[i] - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn identity_is_a_right_unit_of_the_product(b in tensor_strategy(4, 4)) {
        let eye = DenseTensor::identity_matrix(b.dim()).unwrap();
        let c = b.shao_product(&eye, DEFAULT_PRODUCT_BUDGET).unwrap();
        prop_assert_eq!(c, b);
    }

    #[test]
    fn product_of_matrices_is_the_matrix_product(
        n in 1usize..=4,
        seed in prop::collection::vec(-3.0f64..3.0, 32),
    ) {
        let a = DenseTensor::from_vec(2, n, seed[..n * n].to_vec()).unwrap();
        let b = DenseTensor::from_vec(2, n, seed[16..16 + n * n].to_vec()).unwrap();
        let c = a.shao_product(&b, DEFAULT_PRODUCT_BUDGET).unwrap();
        for i in 0..n {
            for j in 0..n {
                let expect: f64 = (0..n).map(|l| a.get(&[i, l]).unwrap() * b.get(&[l, j]).unwrap()).sum();
                prop_assert!((c.get(&[i, j]).unwrap() - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn row_subtensor_contracts_to_the_row(
        (b, v) in tensor_and_vector().prop_filter("order >= 3", |(b, _)| b.order() >= 3),
    ) {
        let full = b.contract_to_vector(&v).unwrap();
        for (i, &expect) in full.iter().enumerate() {
            let r = b.row_subtensor(i).unwrap();
            prop_assert_eq!(r.order(), b.order() - 1);
            let got = r.contract_to_scalar(&v).unwrap();
            prop_assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn general_product_matches_exhaustive_loops(
        a in tensor_strategy(3, 3),
        k in 1usize..=3,
        seed in prop::collection::vec(-2.0f64..2.0, 27),
    ) {
        let n = a.dim();
        let b = DenseTensor::from_vec(k, n, seed[..n.pow(k as u32)].to_vec()).unwrap();
        let c = a.shao_product(&b, DEFAULT_PRODUCT_BUDGET).unwrap();
        prop_assert_eq!(c.order(), (a.order() - 1) * (k - 1) + 1);
        for (x, y) in c.entries().iter().zip(naive_shao(&a, &b)) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn product_of_order_three_and_matrix_by_hand() {
    // a_{111} = 1, a_{122} = 2, a_{212} = -1; b = [[1, 2], [3, 4]]
    let a = DenseTensor::from_fn(3, 2, |i| match (i[0], i[1], i[2]) {
        (0, 0, 0) => 1.0,
        (0, 1, 1) => 2.0,
        (1, 0, 1) => -1.0,
        _ => 0.0,
    })
    .unwrap();
    let b = DenseTensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let c = a.shao_product(&b, DEFAULT_PRODUCT_BUDGET).unwrap();
    // c_{1 a b} = b_{1a} b_{1b} + 2 b_{2a} b_{2b}
    assert_eq!(c.get(&[0, 0, 0]).unwrap(), 1.0 + 2.0 * 9.0);
    assert_eq!(c.get(&[0, 0, 1]).unwrap(), 2.0 + 2.0 * 12.0);
    assert_eq!(c.get(&[0, 1, 1]).unwrap(), 4.0 + 2.0 * 16.0);
    // c_{2 a b} = -b_{1a} b_{2b}
    assert_eq!(c.get(&[1, 0, 1]).unwrap(), -4.0);
    assert_eq!(c.get(&[1, 1, 0]).unwrap(), -6.0);
}
