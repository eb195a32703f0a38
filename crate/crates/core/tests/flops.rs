use iwsn::flops::{conv_flops, fc_flops, mlp_flops_closed_form, network_flops, LayerSpec, NetworkSpec, Window};
use iwsn::Error;
use proptest::prelude::*;

/// Slides the window over a zero-padded input and counts one op per
/// multiply-accumulate plus one per bias add.
#[allow(clippy::too_many_arguments)]
fn conv_by_loops(w: i64, h: i64, c_in: u64, c_out: u64, k: i64, p: i64, s: i64, d: i64, bias: bool) -> u64 {
    let mut ops = 0;
    let mut y = -p;
    while y + d * (k - 1) < h + p {
        let mut x = -p;
        while x + d * (k - 1) < w + p {
            for _ in 0..c_out {
                for _ in 0..c_in {
                    for _ in 0..k * k {
                        ops += 1;
                    }
                }
                if bias {
                    ops += 1;
                }
            }
            x += s;
        }
        y += s;
    }
    ops
}

fn fc_by_loops(i: u64, o: u64, bias: bool) -> u64 {
    let mut ops = 0;
    for _ in 0..o {
        for _ in 0..i {
            ops += 1;
        }
        ops += bias as u64;
    }
    ops
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn conv_matches_loop_count(
        w in 1u64..=8, h in 1u64..=8, c_in in 1u64..=3, c_out in 1u64..=3,
        k in 1u64..=4, p in 0u64..=2, s in 1u64..=3, d in 1u64..=2, bias in any::<bool>(),
    ) {
        let spec = NetworkSpec::image(w, h, c_in).layer(LayerSpec::Conv2d {
            window: Window { kernel: k, padding: p, stride: s, dilation: d },
            c_in: None,
            c_out,
            bias,
        });
        let span = d * (k - 1) + 1;
        match network_flops(&spec) {
            Ok(r) => prop_assert_eq!(
                r.total,
                conv_by_loops(w as i64, h as i64, c_in, c_out, k as i64, p as i64, s as i64, d as i64, bias)
            ),
            Err(Error::Layer { .. }) => prop_assert!(span > w + 2 * p || span > h + 2 * p),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn fc_matches_loop_count(i in 1u64..=64, o in 1u64..=64, bias in any::<bool>()) {
        prop_assert_eq!(fc_flops(i, o, bias).unwrap(), fc_by_loops(i, o, bias));
    }

    #[test]
    fn conv_is_monotone(
        m in 1u64..100, k in 1u64..8, c_in in 1u64..8, c_out in 1u64..8, bias in any::<bool>(),
    ) {
        let base = conv_flops(m, m, k, c_in, c_out, bias).unwrap();
        prop_assert!(conv_flops(m + 1, m, k, c_in, c_out, bias).unwrap() >= base);
        prop_assert!(conv_flops(m, m, k + 1, c_in, c_out, bias).unwrap() >= base);
        prop_assert!(conv_flops(m, m, k, c_in + 1, c_out, bias).unwrap() >= base);
        prop_assert!(conv_flops(m, m, k, c_in, c_out + 1, bias).unwrap() >= base);
        prop_assert!(conv_flops(m, m, k, c_in, c_out, true).unwrap() >= conv_flops(m, m, k, c_in, c_out, false).unwrap());
    }

    #[test]
    fn mlp_network_exceeds_closed_form_by_first_width(
        i in 1u64..500, o1 in 1u64..40, o2 in 1u64..40, o3 in 1u64..10,
    ) {
        let dims = [i as usize, o1 as usize, o2 as usize, o3 as usize];
        let net = network_flops(&NetworkSpec::mlp(&dims)).unwrap().total;
        prop_assert_eq!(net, mlp_flops_closed_form(i, &[o1, o2, o3]).unwrap() + o1);
    }
}

#[test]
fn overflow_is_reported() {
    assert!(matches!(conv_flops(u64::MAX / 2, 4, 3, 3, 3, true), Err(Error::Overflow)));
    let spec = NetworkSpec::image(1 << 30, 1 << 30, 1 << 20).layer(LayerSpec::conv(1, 1 << 20));
    assert!(network_flops(&spec).is_err());
}

#[test]
fn text_and_builder_agree_for_the_reference_network() {
    for (w, h) in [(960, 540), (1280, 720), (1920, 1080)] {
        let text = format!(
            "input w={w} h={h} c=3\nconv2d k=7 p=0 s=1 d=1 cin=3 cout=3 bias=1\nrelu\navgpool k=5\nfc out=128\nrelu\nfc out=64\n"
        );
        let parsed: NetworkSpec = text.parse().unwrap();
        assert_eq!(
            network_flops(&parsed).unwrap().total,
            network_flops(&NetworkSpec::reference_cnn(w, h)).unwrap().total
        );
    }
}
