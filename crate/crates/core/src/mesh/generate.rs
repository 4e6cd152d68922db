//! Small mesh factories used by tests, benchmarks and the convergence study.

use super::{Point2, Triangulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The unit right triangle `(0,0), (1,0), (0,1)`.
pub fn unit_triangle() -> Triangulation {
    Triangulation::new(
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ],
        vec![[0, 1, 2]],
    )
    .expect("valid")
}

/// The unit square split along the anti-diagonal into two triangles.
pub fn unit_square() -> Triangulation {
    Triangulation::new(
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
        ],
        vec![[0, 1, 2], [1, 3, 2]],
    )
    .expect("valid")
}

/// Three-directional triangulation of `[0,1]^2` with `nx * ny` cells, all
/// diagonals running from bottom-right to top-left.
pub fn three_directional(nx: usize, ny: usize) -> Triangulation {
    grid(nx, ny, |_, _| false, Point2::new)
}

/// Grid of `[0,1]^2` with interior vertices jittered by up to `jitter` cell widths
/// and randomly chosen diagonals. Deterministic for a fixed seed.
pub fn jittered_grid(nx: usize, ny: usize, jitter: f64, seed: u64) -> Triangulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let offsets: Vec<(f64, f64)> = (0..(nx + 1) * (ny + 1))
        .map(|_| {
            (
                rng.random_range(-jitter..=jitter),
                rng.random_range(-jitter..=jitter),
            )
        })
        .collect();
    let flips: Vec<bool> = (0..nx * ny).map(|_| rng.random_bool(0.5)).collect();
    grid(
        nx,
        ny,
        |i, j| flips[j * nx + i],
        |x, y| {
            let (i, j) = (
                (x * nx as f64).round() as usize,
                (y * ny as f64).round() as usize,
            );
            let interior_x = i > 0 && i < nx;
            let interior_y = j > 0 && j < ny;
            let (dx, dy) = offsets[j * (nx + 1) + i];
            Point2::new(
                if interior_x && interior_y {
                    x + dx * hx
                } else {
                    x
                },
                if interior_x && interior_y {
                    y + dy * hy
                } else {
                    y
                },
            )
        },
    )
}

fn grid(
    nx: usize,
    ny: usize,
    flip: impl Fn(usize, usize) -> bool,
    place: impl Fn(f64, f64) -> Point2,
) -> Triangulation {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(place(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if flip(i, j) {
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            } else {
                triangles.push([a, b, c]);
                triangles.push([b, d, c]);
            }
        }
    }
    Triangulation::new(vertices, triangles).expect("grid triangulation is valid")
}
