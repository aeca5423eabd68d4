use crate::subst::Substitution;
use crate::unify::{is_renaming, match_all};

use super::skeleton::{Order, Skeleton};

struct Ctx<'a> {
    a: &'a Skeleton,
    b: &'a Skeleton,
    a_order: Order,
    b_order: Order,
    exact: bool,
}

impl Ctx<'_> {
    fn extend(&self, i: usize, map: &mut Vec<usize>, sigma: &Substitution) -> bool {
        let (a, b) = (self.a, self.b);
        if i == a.strands.len() {
            return self.finish(map, sigma);
        }
        let sa = &a.strands[i];
        let candidates: Vec<usize> = if i < a.pov_len() {
            vec![i]
        } else {
            (b.pov_len()..b.strands.len()).collect()
        };
        for j in candidates {
            let Some(sb) = b.strands.get(j) else { continue };
            if map.contains(&j) || sb.role.name != sa.role.name {
                continue;
            }
            if (self.exact && sb.height != sa.height) || sb.height < sa.height {
                continue;
            }
            let pairs: Vec<_> = (0..sa.height)
                .map(|p| (sa.msg(p).clone(), sb.msg(p).clone()))
                .collect();
            for s2 in match_all(&pairs, sigma) {
                map.push(j);
                if self.extend(i + 1, map, &s2) {
                    return true;
                }
                map.pop();
            }
        }
        false
    }

    fn finish(&self, map: &[usize], sigma: &Substitution) -> bool {
        let (a, b) = (self.a, self.b);
        let img = |(s, p): (usize, usize)| (map[s], p);
        for &(x, y) in &a.edges {
            if !self.b_order.before(img(x), img(y)) {
                return false;
            }
        }
        for t in &a.non_orig {
            if !b.non_orig.contains(&sigma.apply(t)) {
                return false;
            }
        }
        if self.exact {
            if !is_renaming(sigma) || a.non_orig.len() != b.non_orig.len() {
                return false;
            }
            let inv = |(s, p): (usize, usize)| (map.iter().position(|&m| m == s).unwrap(), p);
            for &(x, y) in &b.edges {
                if !self.a_order.before(inv(x), inv(y)) {
                    return false;
                }
            }
        }
        true
    }
}

fn run(a: &Skeleton, b: &Skeleton, exact: bool) -> bool {
    if a.pov_len() != b.pov_len() || a.strands.len() > b.strands.len() {
        return false;
    }
    if exact && a.strands.len() != b.strands.len() {
        return false;
    }
    let (Some(a_order), Some(b_order)) = (a.order(), b.order()) else {
        return false;
    };
    let ctx = Ctx {
        a,
        b,
        a_order,
        b_order,
        exact,
    };
    ctx.extend(0, &mut Vec::new(), &Substitution::new())
}

/// A structure-preserving map from `a` into `b`: point-of-view strands map
/// to themselves, other strands injectively to strands of the same role
/// and at least the same height, messages match under one substitution,
/// and the ordering is preserved.
pub fn homomorphism(a: &Skeleton, b: &Skeleton) -> bool {
    run(a, b, false)
}

/// Same strands, heights and ordering up to a renaming of variables.
pub fn isomorphic(a: &Skeleton, b: &Skeleton) -> bool {
    run(a, b, true) && run(b, a, true)
}
