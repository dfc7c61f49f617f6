#ifndef RDSLAB_GEOMETRY_HPP
#define RDSLAB_GEOMETRY_HPP

#include <span>
#include <string>
#include <vector>

// Metric and set primitives on the unit cube [0,1]^d and on the probability
// simplex, plus generators for compact test sets with a prescribed
// (idealized) Hausdorff dimension. All functions here are pure.

namespace rdslab {

enum class Metric { Uniform, Euclidean };

using Vec = std::vector<double>;
using PointList = std::vector<Vec>;

// Finite point cloud approximating a compact set. nominal_dimension refers to
// the idealized depth->infinity set, not to the finite cloud.
struct CompactSetApprox {
    PointList points;
    double nominal_dimension = 0.0;
    int depth = 0;
    std::string descriptor;
};

// A face of the cube: alpha[i] in {-1,0,+1}; nonzero entries pin coordinate i
// to (1+alpha[i])/2, zero entries are free.
struct FaceIndex {
    std::vector<int> alpha;
};

double point_distance(std::span<const double> a, std::span<const double> b, Metric metric);

// sup_{a in A} min_{b in B} d(a,b). Asymmetric. Throws on empty input.
double hausdorff_semidistance(const PointList& a, const PointList& b, Metric metric);

// max_{x in c} x[k], k is a 0-based coordinate index.
double height(const PointList& c, int k);

enum class Diamond { DSub, UbarSub, Ubar };

// DSub:    x[i] <= h
// UbarSub: x[j] <= h for all j != i
// Ubar:    exists i with x in UbarSub(i)
bool diamond_membership(std::span<const double> x, double h, Diamond variant, int i = -1);

// Level of x in the nested neighborhood partition with base scale d^-l0:
// the largest l >= 1 with x in Ubar_{d^-l0 d^-l}, or 0 if there is none.
// Boundary points (<=) take the larger level. Returns level_cap() for points
// that lie in every neighborhood (vertices).
int level_index(std::span<const double> x, int l0, int d);
int level_cap();

// Endpoint cloud of the depth-truncated two-branch self-similar subset of
// [0,1] with contraction ratio in (0, 1/2]. Depth 0 gives {0,1}.
CompactSetApprox make_cantor_cloud(double ratio, int depth);

// Same construction with the ratio given as log(ratio); supports idealized
// dimensions too small for a representable ratio (points underflow to the
// interval endpoints, which is the correct truncation limit).
CompactSetApprox make_cantor_cloud_log_ratio(double log_ratio, int depth);

// Cartesian product; nominal dimensions add.
CompactSetApprox product_cloud(const CompactSetApprox& a, const CompactSetApprox& b);

// Embeds a 1-d cloud into [0,1]^dim along `axis`, other coordinates = fill.
CompactSetApprox embed_axis(const CompactSetApprox& cloud, int dim, int axis, double fill);

// Uniform grid on the segment {x : x[axis] in [0,1], x[j]=fill otherwise}.
CompactSetApprox line_segment_cloud(int n_points, int dim, int axis, double fill);

// Maps a 1-d cloud t -> (t, 1-t) onto the m=2 probability simplex.
CompactSetApprox cloud_to_simplex_segment(const CompactSetApprox& cloud);

// Grid discretization of one face; grid = number of samples per free axis.
PointList face_points(const FaceIndex& alpha, int grid);

// Grid discretization of the union of all m_level-dimensional faces of
// [0,1]^d. m_level = 0 gives exactly the vertex set.
PointList h_union(int m_level, int d, int grid);

// Exact uniform-norm distance from a cube point to the union of
// m_level-dimensional faces: the (d - m_level)-th smallest boundary gap.
double distance_to_face_union(std::span<const double> x, int m_level);

void save_points_csv(const std::string& path, const PointList& points);

}  // namespace rdslab

#endif
