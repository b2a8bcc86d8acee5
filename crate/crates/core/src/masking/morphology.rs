use crate::geometry::Mask;

/// 3×3 dilation followed by 3×3 erosion, computed as if the image continued
/// with background beyond its border. The result always contains the input.
pub fn close3x3(mask: &Mask) -> Mask {
    let (w, h) = mask.dims();
    // One pixel of padding holds the dilation that spills past the border.
    let mut padded = Mask::empty(w + 2, h + 2);
    for v in 0..h {
        for u in 0..w {
            padded.set(u + 1, v + 1, mask.get(u, v));
        }
    }
    let dilated = sweep(&padded, |acc, px| acc || px);
    let closed = sweep(&dilated, |acc, px| acc && px);
    let mut out = Mask::empty(w, h);
    for v in 0..h {
        for u in 0..w {
            out.set(u, v, closed.get(u + 1, v + 1));
        }
    }
    out
}

fn sweep(mask: &Mask, fold: impl Fn(bool, bool) -> bool) -> Mask {
    let (w, h) = mask.dims();
    let mut out = Mask::empty(w, h);
    for v in 0..h {
        for u in 0..w {
            let mut acc = mask.get(u, v);
            for dv in -1i64..=1 {
                for du in -1i64..=1 {
                    let (x, y) = (u as i64 + du, v as i64 + dv);
                    let px = if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        false
                    } else {
                        mask.get(x as usize, y as usize)
                    };
                    acc = fold(acc, px);
                }
            }
            out.set(u, v, acc);
        }
    }
    out
}
