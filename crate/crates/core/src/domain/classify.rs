//! Raster classification: connected components, x-simplicity, pieces.

use rayon::prelude::*;

use super::witness::find_witness;
use super::{DomainError, Rect, Region, Witness};

/// Node raster over the bbox at resolution `h`.  `labels[i*nx+j] == 0` means
/// the node at `(t0 + i*h, x0 + j*h)` is outside the region; positive values
/// are 1-based component ids.
#[derive(Debug, Clone)]
pub struct Raster {
    pub t0: f64,
    pub x0: f64,
    pub h: f64,
    pub nt: usize,
    pub nx: usize,
    pub labels: Vec<u32>,
}

impl Raster {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nx + j
    }

    /// Label of the node nearest to `(t, x)`; 0 when off-grid or outside.
    pub fn label_at(&self, t: f64, x: f64) -> u32 {
        let i = ((t - self.t0) / self.h).round();
        let j = ((x - self.x0) / self.h).round();
        if i < 0.0 || j < 0.0 {
            return 0;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nt || j >= self.nx {
            return 0;
        }
        self.labels[self.idx(i, j)]
    }
}

/// Per-component summary at raster scale.
#[derive(Debug, Clone)]
pub struct ComponentInfo {
    pub id: u32,
    pub node_count: usize,
    /// Node bounding box inflated by one raster step.
    pub bbox: Rect,
    /// Raw extent of the component's raster nodes in `t` and `x` (zero for a
    /// single row or column), before the one-step inflation of `bbox`.
    pub node_extent: (f64, f64),
    /// Every slice of this component is a single interval.
    pub x_simple: bool,
}

/// Result of [`classify`].
#[derive(Debug, Clone)]
pub struct Classification {
    /// Raster resolution the answers are valid at.
    pub h: f64,
    /// Every slice of the whole region is empty or a single interval.
    pub x_simple: bool,
    pub components: Vec<ComponentInfo>,
    /// Maximal x-simple sub-regions: the x-simple connected components,
    /// returned as regions clipped to the component's bounding strip.
    pub pieces: Vec<Region>,
    /// Present when some component fails to be x-simple and the rectangle
    /// configuration of a non-simplicity witness was found at this resolution.
    pub witness: Option<Witness>,
    /// `(t, component id)` for every scanned slice on which the component
    /// splits into two or more intervals.
    pub disconnected_slices: Vec<(f64, u32)>,
    pub warnings: Vec<String>,
    pub raster: Raster,
}

/// Classify a region at its configured resolution.
///
/// Components come from a 4-connected flood fill of the membership raster
/// (the measure-zero excluded set never disconnects the raster).
/// x-simplicity is decided by scanning slices at every grid parameter plus
/// every parameter line carrying an exclusion, so point punctures are seen
/// even though the raster steps over them.
pub fn classify(region: &Region) -> Result<Classification, DomainError> {
    let h = region.resolution();
    let raster = build_raster(region, h);
    let (raster, mut components) = label_components(raster);
    if components.is_empty() {
        return Err(DomainError::EmptyRegion(h));
    }

    // Slice scan: global and per-component interval counts.
    let ts = region.t_scan_values(h);
    let mut region_x_simple = true;
    let mut comp_multi = vec![false; components.len()];
    let scan: Vec<(usize, Vec<u32>)> = ts
        .par_iter()
        .map(|&t| {
            let slice = region.slice(t);
            let labels: Vec<u32> = slice
                .intervals
                .iter()
                .map(|iv| interval_label(&raster, t, iv.lo, iv.hi))
                .collect();
            (slice.intervals.len(), labels)
        })
        .collect();
    let mut disconnected_slices = Vec::new();
    for (&t, (count, labels)) in ts.iter().zip(&scan) {
        if *count > 1 {
            region_x_simple = false;
        }
        for id in 1..=components.len() as u32 {
            if labels.iter().filter(|&&l| l == id).count() > 1 {
                comp_multi[(id - 1) as usize] = true;
                disconnected_slices.push((t, id));
            }
        }
    }
    for (comp, &multi) in components.iter_mut().zip(&comp_multi) {
        comp.x_simple = !multi;
    }

    let mut warnings = Vec::new();
    for comp in &components {
        if comp.node_extent.0 < 2.0 * h || comp.node_extent.1 < 2.0 * h {
            warnings.push(format!(
                "component {} spans less than 2h in some direction; the resolution {h:.3e} may be too coarse for it",
                comp.id
            ));
        }
    }

    // Pieces: x-simple components, cut out as regions over their bounding strip.
    let mut pieces = Vec::new();
    for comp in &components {
        if !comp.x_simple {
            continue;
        }
        let piece = clip_region(region, comp.bbox, h);
        if piece_is_clean(&piece, h) {
            pieces.push(piece);
        } else {
            warnings.push(format!(
                "component {} could not be cut out as a standalone piece at resolution {h:.3e}",
                comp.id
            ));
        }
    }

    let mut cls = Classification {
        h,
        x_simple: region_x_simple,
        components,
        pieces,
        witness: None,
        disconnected_slices,
        warnings,
        raster,
    };
    if cls.components.iter().any(|c| !c.x_simple) {
        match find_witness(region, &cls) {
            Ok(w) => cls.witness = Some(w),
            Err(e) => cls.warnings.push(e.to_string()),
        }
    }
    Ok(cls)
}

fn build_raster(region: &Region, h: f64) -> Raster {
    let nt = ((region.bbox.t1 - region.bbox.t0) / h).ceil() as usize + 1;
    let nx = ((region.bbox.x1 - region.bbox.x0) / h).ceil() as usize + 1;
    let mut labels = vec![0u32; nt * nx];
    let t0 = region.bbox.t0;
    let x0 = region.bbox.x0;
    labels
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(i, row)| {
            let t = t0 + i as f64 * h;
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = u32::from(region.contains(t, x0 + j as f64 * h));
            }
        });
    Raster {
        t0,
        x0,
        h,
        nt,
        nx,
        labels,
    }
}

/// Flood-fill the 0/1 mask into 1-based component labels.
fn label_components(mut raster: Raster) -> (Raster, Vec<ComponentInfo>) {
    let (nt, nx) = (raster.nt, raster.nx);
    // Re-encode: 1 = inside unvisited, 0 = outside; labels start at 2 during
    // the fill and are shifted down afterwards.
    let mut next = 2u32;
    let mut stack: Vec<u32> = Vec::new();
    let mut infos: Vec<(usize, usize, usize, usize, usize)> = Vec::new();
    for start in 0..raster.labels.len() {
        if raster.labels[start] != 1 {
            continue;
        }
        let label = next;
        next += 1;
        let (mut imin, mut imax, mut jmin, mut jmax, mut count) =
            (usize::MAX, 0usize, usize::MAX, 0usize, 0usize);
        raster.labels[start] = label;
        stack.push(start as u32);
        while let Some(idx) = stack.pop() {
            let idx = idx as usize;
            let (i, j) = (idx / nx, idx % nx);
            count += 1;
            imin = imin.min(i);
            imax = imax.max(i);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
            if i > 0 && raster.labels[idx - nx] == 1 {
                raster.labels[idx - nx] = label;
                stack.push((idx - nx) as u32);
            }
            if i + 1 < nt && raster.labels[idx + nx] == 1 {
                raster.labels[idx + nx] = label;
                stack.push((idx + nx) as u32);
            }
            if j > 0 && raster.labels[idx - 1] == 1 {
                raster.labels[idx - 1] = label;
                stack.push((idx - 1) as u32);
            }
            if j + 1 < nx && raster.labels[idx + 1] == 1 {
                raster.labels[idx + 1] = label;
                stack.push((idx + 1) as u32);
            }
        }
        infos.push((imin, imax, jmin, jmax, count));
    }
    for l in raster.labels.iter_mut() {
        if *l >= 2 {
            *l -= 1;
        }
    }
    let components = infos
        .into_iter()
        .enumerate()
        .map(|(k, (imin, imax, jmin, jmax, count))| {
            let h = raster.h;
            ComponentInfo {
                id: k as u32 + 1,
                node_count: count,
                bbox: Rect {
                    t0: (raster.t0 + imin as f64 * h - h).max(raster.t0),
                    t1: raster.t0 + imax as f64 * h + h,
                    x0: (raster.x0 + jmin as f64 * h - h).max(raster.x0),
                    x1: raster.x0 + jmax as f64 * h + h,
                },
                node_extent: ((imax - imin) as f64 * h, (jmax - jmin) as f64 * h),
                x_simple: true,
            }
        })
        .collect();
    (raster, components)
}

/// Component id owning the interval `(lo, hi)` of the slice at `t`: probe a
/// few interior points and take the first labelled raster node.
fn interval_label(raster: &Raster, t: f64, lo: f64, hi: f64) -> u32 {
    for k in [0.5, 0.25, 0.75, 0.1, 0.9] {
        let label = raster.label_at(t, lo + (hi - lo) * k);
        if label != 0 {
            return label;
        }
    }
    0
}

fn clip_region(region: &Region, bbox: Rect, h: f64) -> Region {
    let clipped = Rect {
        t0: bbox.t0.max(region.bbox.t0),
        t1: bbox.t1.min(region.bbox.t1),
        x0: bbox.x0.max(region.bbox.x0),
        x1: bbox.x1.min(region.bbox.x1),
    };
    let mut piece = region.clone();
    piece.bbox = clipped;
    piece.resolution = Some(h);
    piece
        .exclude_points
        .retain(|&(t, x)| clipped.t0 <= t && t <= clipped.t1 && clipped.x0 <= x && x <= clipped.x1);
    piece
        .exclude_vsegments
        .retain(|&(t, _, _)| clipped.t0 <= t && t <= clipped.t1);
    piece
}

/// A piece must stand on its own: nonempty, connected, every slice a single
/// interval.  Lightweight re-check without recursing into piece extraction.
fn piece_is_clean(piece: &Region, h: f64) -> bool {
    let raster = build_raster(piece, h);
    let (_, components) = label_components(raster);
    if components.len() != 1 {
        return false;
    }
    piece
        .t_scan_values(h)
        .into_par_iter()
        .all(|t| piece.slice(t).intervals.len() <= 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use crate::expr::parse;

    fn rect_region() -> Region {
        let mut r = Region::new(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            vec![Shape::Rect(Rect::new(0.0, 1.0, 0.0, 1.0))],
        );
        r.resolution = Some(5e-3);
        r
    }

    #[test]
    fn rectangle_is_x_simple_with_one_piece() {
        let cls = classify(&rect_region()).unwrap();
        assert!(cls.x_simple);
        assert_eq!(cls.components.len(), 1);
        assert_eq!(cls.pieces.len(), 1);
        assert!(cls.witness.is_none());
        let piece = classify(&cls.pieces[0]).unwrap();
        assert!(piece.x_simple && piece.components.len() == 1);
    }

    #[test]
    fn punctured_plane_is_connected_but_not_x_simple() {
        let mut r = Region::new(
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            vec![Shape::Rect(Rect::new(-1.0, 1.0, -1.0, 1.0))],
        );
        r.exclude_points.push((0.0, 0.0));
        r.resolution = Some(5e-3);
        let cls = classify(&r).unwrap();
        assert!(!cls.x_simple, "slice at t=0 is split by the puncture");
        assert_eq!(cls.components.len(), 1, "a point does not disconnect");
        assert!(cls.components.iter().all(|c| !c.x_simple));
        assert!(cls.pieces.is_empty());
        let w = cls.witness.expect("witness near the origin");
        assert!(w.t0.abs() <= 2.0 * cls.h && w.x1.abs() <= 2.0 * cls.h && w.x2.abs() <= 2.0 * cls.h);
        assert!(w.eps > 0.0);
    }

    #[test]
    fn stacked_rectangles_have_two_x_simple_components_and_no_witness() {
        let mut r = Region::new(
            Rect::new(0.0, 1.0, 0.0, 3.0),
            vec![
                Shape::Rect(Rect::new(0.0, 1.0, 0.0, 1.0)),
                Shape::Rect(Rect::new(0.0, 1.0, 2.0, 3.0)),
            ],
        );
        r.resolution = Some(5e-3);
        let cls = classify(&r).unwrap();
        assert!(!cls.x_simple, "slices carry two intervals");
        assert_eq!(cls.components.len(), 2);
        assert!(cls.components.iter().all(|c| c.x_simple));
        assert_eq!(cls.pieces.len(), 2);
        assert!(cls.witness.is_none());
        for piece in &cls.pieces {
            let sub = classify(piece).unwrap();
            assert!(sub.x_simple && sub.components.len() == 1);
        }
    }

    #[test]
    fn annulus_predicate_region_is_connected_not_x_simple() {
        let mut r = Region::new(
            Rect::new(-1.1, 1.1, -1.1, 1.1),
            vec![Shape::Expr(
                parse("t^2 + x^2 < 1 && t^2 + x^2 > 0.25").unwrap(),
            )],
        );
        r.resolution = Some(5e-3);
        let cls = classify(&r).unwrap();
        assert_eq!(cls.components.len(), 1);
        assert!(!cls.x_simple);
        assert!(cls.pieces.is_empty());
        let w = cls.witness.expect("annulus witness at a side of the hole");
        assert!((w.t0.abs() - 0.5).abs() <= 2.0 * cls.h, "t0 = {}", w.t0);
        // the slice gap scales like sqrt(h) next to a smooth tangency
        let gap_scale = (2.0 * cls.h).sqrt();
        assert!(w.x1.abs() <= 1.5 * gap_scale && w.x2.abs() <= 1.5 * gap_scale);
    }

    #[test]
    fn empty_region_is_an_error() {
        let mut r = Region::new(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            vec![Shape::Rect(Rect::new(5.0, 6.0, 5.0, 6.0))],
        );
        r.resolution = Some(1e-2);
        assert!(matches!(classify(&r), Err(DomainError::EmptyRegion(_))));
    }

    #[test]
    fn thin_component_raises_a_warning() {
        // One raster row tall: the node at x = 0.51 is the only one inside.
        let mut r = Region::new(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            vec![Shape::Rect(Rect::new(0.0, 1.0, 0.505, 0.512))],
        );
        r.resolution = Some(1e-2);
        let cls = classify(&r).unwrap();
        assert!(!cls.warnings.is_empty());
        assert!(cls.components[0].node_extent.1 < 2.0 * cls.h);
    }
}
