#include "hypertrack/unmixing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace hypertrack {

using nlohmann::json;

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }
}  // namespace

void SpectralLibrary::validate() const {
    if (atoms.rows() < 1 || atoms.cols() < 1) fail("library: empty");
    if (!atoms.allFinite()) fail("library: non-finite atom");
    for (int m = 0; m < atoms.cols(); ++m)
        if (atoms.col(m).norm() == 0.0) fail("library: zero column " + std::to_string(m));
    if (!wavelengths_nm.empty() &&
        wavelengths_nm.size() != static_cast<std::size_t>(atoms.rows()))
        fail("library: wavelength count does not match band count");
}

SpectralLibrary load_library(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) fail("cannot open library " + file.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        fail("corrupt library " + file.string() + ": " + e.what());
    }
    SpectralLibrary lib;
    try {
        const int bands = j.at("bands").get<int>();
        if (j.contains("wavelengths_nm"))
            lib.wavelengths_nm = j.at("wavelengths_nm").get<std::vector<double>>();
        const auto atoms = j.at("atoms").get<std::vector<std::vector<double>>>();
        if (atoms.empty()) fail("library " + file.string() + " has no atoms");
        lib.atoms.resize(bands, static_cast<int>(atoms.size()));
        for (std::size_t m = 0; m < atoms.size(); ++m) {
            if (atoms[m].size() != static_cast<std::size_t>(bands))
                fail("library " + file.string() + ": atom " + std::to_string(m) +
                     " has wrong length");
            for (int l = 0; l < bands; ++l) lib.atoms(l, static_cast<int>(m)) = atoms[m][l];
        }
    } catch (const json::exception& e) {
        fail("corrupt library " + file.string() + ": " + e.what());
    }
    lib.validate();
    return lib;
}

void save_library(const SpectralLibrary& lib, const std::filesystem::path& file) {
    lib.validate();
    json j;
    j["bands"] = lib.bands();
    j["wavelengths_nm"] = lib.wavelengths_nm;
    std::vector<std::vector<double>> atoms(lib.size());
    for (int m = 0; m < lib.size(); ++m) {
        atoms[m].resize(lib.bands());
        for (int l = 0; l < lib.bands(); ++l) atoms[m][l] = lib.atoms(l, m);
    }
    j["atoms"] = atoms;
    std::ofstream os(file);
    if (!os) fail("cannot write library " + file.string());
    os << j.dump(2) << "\n";
}

Eigen::MatrixXd cube_to_matrix(const HyperspectralCube& cube) {
    const std::size_t plane = static_cast<std::size_t>(cube.width) * cube.height;
    Eigen::MatrixXd X(cube.bands, static_cast<Eigen::Index>(plane));
    for (std::size_t p = 0; p < plane; ++p)
        for (int k = 0; k < cube.bands; ++k)
            X(k, static_cast<Eigen::Index>(p)) = cube.data[k * plane + p];
    return X;
}

// ---- VCA -------------------------------------------------------------------

EndmemberSet vca(const Eigen::MatrixXd& X, int R, std::uint64_t seed) {
    const int L = static_cast<int>(X.rows());
    const int N = static_cast<int>(X.cols());
    if (R < 1) fail("vca: R must be >= 1");
    if (N < R) fail("vca: fewer pixels than endmembers");
    if (R > L) fail("vca: R exceeds band count");

    const Eigen::MatrixXd C = (X * X.transpose()) / static_cast<double>(N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) fail("vca: eigendecomposition failed");
    // eigenvalues ascending; take the top R
    const Eigen::VectorXd evals = eig.eigenvalues();
    const double top = evals(L - 1);
    if (top <= 0.0 || evals(L - R) <= top * 1e-14)
        fail("vca: rank(X) < " + std::to_string(R) + "; reduce R");
    Eigen::MatrixXd Ud(L, R);
    for (int i = 0; i < R; ++i) Ud.col(i) = eig.eigenvectors().col(L - 1 - i);

    const Eigen::MatrixXd Y = Ud.transpose() * X;  // R x N

    EndmemberSet out;
    out.source_indices.resize(R);

    if (R == 1) {
        int k = 0;
        Y.row(0).cwiseAbs().maxCoeff(&k);
        out.source_indices[0] = k;
        out.spectra = X.col(k);
        return out;
    }

    // Projective projection onto the hyperplane y'u = 1.
    const Eigen::VectorXd u = Y.rowwise().mean();
    Eigen::MatrixXd Yp(R, N);
    for (int j = 0; j < N; ++j) {
        double d = Y.col(j).dot(u);
        if (std::abs(d) < 1e-300) d = d >= 0.0 ? 1e-300 : -1e-300;
        Yp.col(j) = Y.col(j) / d;
    }

    Rng rng(seed);
    std::vector<Eigen::VectorXd> basis;
    {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(R);
        e(R - 1) = 1.0;
        basis.push_back(e);
    }

    for (int i = 0; i < R; ++i) {
        Eigen::VectorXd f(R);
        double nf = 0.0;
        for (int attempt = 0; attempt < 64; ++attempt) {
            for (int r = 0; r < R; ++r) f(r) = rng.gaussian();
            for (const auto& b : basis) f -= b.dot(f) * b;
            nf = f.norm();
            if (nf > 1e-12) break;
        }
        if (nf <= 1e-12) fail("vca: degenerate projection direction");
        f /= nf;
        int k = 0;
        (f.transpose() * Yp).cwiseAbs().maxCoeff(&k);
        out.source_indices[i] = k;

        if (i == 0) basis.clear();  // the seed direction is replaced by the first pick
        Eigen::VectorXd b = Yp.col(k);
        for (const auto& prev : basis) b -= prev.dot(b) * prev;
        const double nb = b.norm();
        if (nb > 1e-12) basis.push_back(b / nb);
    }

    out.spectra.resize(L, R);
    for (int i = 0; i < R; ++i) out.spectra.col(i) = X.col(out.source_indices[i]);
    return out;
}

// ---- Library construction ----------------------------------------------------

namespace {

Eigen::MatrixXd kmeans(const Eigen::MatrixXd& points, int k, Rng& rng, int max_iters,
                       double tol) {
    const int n = static_cast<int>(points.cols());
    const int dim = static_cast<int>(points.rows());

    // k-means++ seeding
    Eigen::MatrixXd centers(dim, k);
    std::vector<bool> chosen(n, false);
    {
        const int first = static_cast<int>(rng.integer(n));
        centers.col(0) = points.col(first);
        chosen[first] = true;
        Eigen::VectorXd d2 =
            (points.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
        for (int c = 1; c < k; ++c) {
            const double total = d2.sum();
            int pick = -1;
            if (total > 0.0) {
                double r = rng.uniform() * total;
                for (int j = 0; j < n; ++j) {
                    r -= d2(j);
                    if (r <= 0.0) {
                        pick = j;
                        break;
                    }
                }
                if (pick < 0) pick = n - 1;
            } else {
                for (int j = 0; j < n; ++j)
                    if (!chosen[j]) {
                        pick = j;
                        break;
                    }
                if (pick < 0) pick = 0;
            }
            centers.col(c) = points.col(pick);
            chosen[pick] = true;
            d2 = d2.cwiseMin(
                (points.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
        }
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        for (int j = 0; j < n; ++j) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int c = 0; c < k; ++c) {
                const double d = (points.col(j) - centers.col(c)).squaredNorm();
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            assign[j] = arg;
        }
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(dim, k);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (int j = 0; j < n; ++j) {
            next.col(assign[j]) += points.col(j);
            counts(assign[j]) += 1.0;
        }
        for (int c = 0; c < k; ++c) {
            if (counts(c) > 0.0) {
                next.col(c) /= counts(c);
            } else {
                // re-seed an empty cluster with the point farthest from its center
                int far = 0;
                double best = -1.0;
                for (int j = 0; j < n; ++j) {
                    const double d = (points.col(j) - centers.col(assign[j])).squaredNorm();
                    if (d > best) {
                        best = d;
                        far = j;
                    }
                }
                next.col(c) = points.col(far);
            }
        }
        const double shift = (next - centers).colwise().squaredNorm().maxCoeff();
        centers = next;
        if (shift < tol) break;
    }
    return centers;
}

}  // namespace

SpectralLibrary build_library(const std::vector<HyperspectralCube>& cubes, int per_cube_R,
                              int M, std::uint64_t seed) {
    if (cubes.empty()) fail("build_library: no cubes");
    if (per_cube_R < 1) fail("build_library: per_cube_R must be >= 1");
    if (M < 1) fail("build_library: M must be >= 1");

    const int L = cubes.front().bands;
    Eigen::MatrixXd pool(L, static_cast<Eigen::Index>(cubes.size()) * per_cube_R);
    int col = 0;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (cubes[i].bands != L) fail("build_library: cubes have differing band counts");
        const EndmemberSet e = vca(cube_to_matrix(cubes[i]), per_cube_R, seed + i);
        for (int r = 0; r < per_cube_R; ++r) pool.col(col++) = e.spectra.col(r);
    }
    if (M > col) fail("build_library: M exceeds the pooled endmember count");

    Rng rng(seed);
    SpectralLibrary lib;
    lib.atoms = kmeans(pool, M, rng, 300, 1e-6);
    lib.wavelengths_nm = cubes.front().wavelengths_nm;
    lib.validate();
    return lib;
}

// ---- CLSUnSAL ----------------------------------------------------------------

double auto_unmix_lambda(const Eigen::MatrixXd& X, const SpectralLibrary& A) {
    return 1e-3 * (A.atoms.transpose() * X).cwiseAbs().maxCoeff();
}

ClsunsalResult clsunsal(const Eigen::MatrixXd& X, const SpectralLibrary& A, double lambda,
                        const AdmmOptions& opt) {
    A.validate();
    if (lambda < 0.0) fail("clsunsal: lambda must be >= 0");
    if (X.rows() != A.atoms.rows()) fail("clsunsal: band count mismatch with library");
    const int M = A.size();
    const int N = static_cast<int>(X.cols());
    double mu = opt.mu;
    if (!(mu > 0.0)) fail("clsunsal: mu must be positive");

    const Eigen::MatrixXd& D = A.atoms;
    const Eigen::MatrixXd DtD2 = 2.0 * D.transpose() * D;
    const Eigen::MatrixXd DtX2 = 2.0 * D.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> solver(DtD2 + mu * Eigen::MatrixXd::Identity(M, M));

    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(M, N);
    Eigen::MatrixXd Dual = Eigen::MatrixXd::Zero(M, N);
    Eigen::MatrixXd U(M, N), Vnext(M, N);

    auto objective = [&](const Eigen::MatrixXd& S) {
        double rows = 0.0;
        for (int m = 0; m < M; ++m) rows += S.row(m).norm();
        return (X - D * S).squaredNorm() + lambda * rows;
    };

    ClsunsalResult res;
    const double scale = std::sqrt(static_cast<double>(M) * N);
    double prev_obj = objective(V);
    double best_obj = prev_obj;
    Eigen::MatrixXd best = V;

    for (int it = 0; it < opt.max_iters; ++it) {
        // Penalty adaptation: an iterate that would raise the objective is
        // discarded and retried with a doubled penalty (duals rescaled so the
        // unscaled multiplier is unchanged). Large penalties turn the sweep
        // into a small proximal-gradient step, so the retry loop terminates.
        for (int attempt = 0; attempt < 60; ++attempt) {
            U = solver.solve(DtX2 + mu * (V - Dual));
            const Eigen::MatrixXd Z = (U + Dual).cwiseMax(0.0);
            for (int m = 0; m < M; ++m) {
                const double nz = Z.row(m).norm();
                const double s = nz > 0.0 ? std::max(0.0, 1.0 - lambda / (mu * nz)) : 0.0;
                Vnext.row(m) = s * Z.row(m);
            }
            const double obj = objective(Vnext);
            if (obj <= prev_obj + 1e-12 * std::max(1.0, std::abs(prev_obj))) {
                prev_obj = obj;
                break;
            }
            mu *= 2.0;
            Dual /= 2.0;
            solver.compute(DtD2 + mu * Eigen::MatrixXd::Identity(M, M));
        }
        Dual += U - Vnext;
        V = Vnext;

        res.objective.push_back(prev_obj);
        res.iterations = it + 1;
        if (prev_obj < best_obj) {
            best_obj = prev_obj;
            best = V;
        }
        if ((U - V).norm() / scale < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.S = best_obj <= prev_obj ? best : V;
    return res;
}

// ---- Endmember selection -------------------------------------------------------

EndmemberSet select_endmembers(const Eigen::MatrixXd& S, const SpectralLibrary& A, int R) {
    const int M = static_cast<int>(S.rows());
    if (M != A.size()) fail("select_endmembers: S rows do not match library size");
    if (R < 1 || R > M) fail("select_endmembers: R out of range");

    const Eigen::VectorXd sums = S.rowwise().sum();
    if (sums.maxCoeff() <= 0.0) fail("select_endmembers: no material detected");

    std::vector<int> order(M);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (sums(a) != sums(b)) return sums(a) > sums(b);
        return a < b;
    });

    EndmemberSet out;
    out.spectra.resize(A.bands(), R);
    out.source_indices.assign(order.begin(), order.begin() + R);
    for (int i = 0; i < R; ++i) out.spectra.col(i) = A.atoms.col(order[i]);

    if (R > 1) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.spectra);
        if (svd.singularValues()(R - 1) < 1e-10 * svd.singularValues()(0))
            fail("select_endmembers: selected endmembers are linearly dependent");
    }
    return out;
}

// ---- HySime ----------------------------------------------------------------------

HysimeResult hysime(const Eigen::MatrixXd& X, NoiseEstimate method) {
    (void)method;  // only band regression implemented
    const int L = static_cast<int>(X.rows());
    const int N = static_cast<int>(X.cols());
    const int ceiling = std::min(L - 1, 8);

    if (L < 2 || N < 2 || !X.allFinite()) return {1, true};

    // Band-wise regression residuals give the noise estimate.
    const Eigen::MatrixXd RR = X * X.transpose();
    const Eigen::MatrixXd RRi =
        (RR + 1e-6 * Eigen::MatrixXd::Identity(L, L)).ldlt().solve(
            Eigen::MatrixXd::Identity(L, L));
    if (!RRi.allFinite()) return {1, true};

    Eigen::MatrixXd W(L, N);
    for (int i = 0; i < L; ++i) {
        const double pivot = RRi(i, i);
        if (!(std::abs(pivot) > 1e-300)) return {1, true};
        const Eigen::MatrixXd XX = RRi - (RRi.col(i) * RRi.row(i)) / pivot;
        Eigen::VectorXd RRa = RR.col(i);
        RRa(i) = 0.0;
        Eigen::VectorXd beta = XX * RRa;
        beta(i) = 0.0;
        W.row(i) = X.row(i) - beta.transpose() * X;
    }
    if (!W.allFinite()) return {1, true};

    const Eigen::MatrixXd Xs = X - W;
    const Eigen::MatrixXd Ry = RR / static_cast<double>(N);
    const Eigen::MatrixXd Rx = (Xs * Xs.transpose()) / static_cast<double>(N);
    Eigen::MatrixXd Rn = ((W * W.transpose()) / static_cast<double>(N)).diagonal().asDiagonal();
    Rn += (Rx.trace() / L / 1e5) * Eigen::MatrixXd::Identity(L, L);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Rx);
    if (eig.info() != Eigen::Success) return {1, true};

    int count = 0;
    for (int i = 0; i < L; ++i) {
        const Eigen::VectorXd e = eig.eigenvectors().col(L - 1 - i);  // descending order
        const double py = e.dot(Ry * e);
        const double pn = e.dot(Rn * e);
        if (-py + 2.0 * pn < 0.0) ++count;
    }
    return {std::clamp(count, 1, ceiling), false};
}

// ---- SPU (fully constrained least squares) -----------------------------------------

namespace {

// Equality-constrained LS on the free set; returns false if the KKT system is
// singular.
bool solve_scls(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                const std::vector<int>& free, Eigen::VectorXd& a_free, double& nu) {
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd K(nf + 1, nf + 1);
    Eigen::VectorXd rhs(nf + 1);
    for (int i = 0; i < nf; ++i) {
        for (int j = 0; j < nf; ++j) K(i, j) = 2.0 * G(free[i], free[j]);
        K(i, nf) = 1.0;
        K(nf, i) = 1.0;
        rhs(i) = 2.0 * c(free[i]);
    }
    K(nf, nf) = 0.0;
    rhs(nf) = 1.0;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
    a_free = sol.head(nf);
    nu = sol(nf);
    return true;
}

// Exhaustive support enumeration; exact fallback for tiny R.
Eigen::VectorXd simplex_ls_enumerate(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                                     double cTc_ignored, const Eigen::MatrixXd& E,
                                     const Eigen::VectorXd& x) {
    (void)cTc_ignored;
    const int R = static_cast<int>(G.rows());
    if (R > 20) fail("simplex_ls: enumeration fallback infeasible for R > 20");
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_a = Eigen::VectorXd::Zero(R);
    best_a(0) = 1.0;
    for (unsigned mask = 1; mask < (1u << R); ++mask) {
        std::vector<int> free;
        for (int i = 0; i < R; ++i)
            if (mask & (1u << i)) free.push_back(i);
        Eigen::VectorXd af;
        double nu;
        if (!solve_scls(G, c, free, af, nu)) continue;
        if (af.minCoeff() < -1e-12) continue;
        Eigen::VectorXd a = Eigen::VectorXd::Zero(R);
        for (std::size_t i = 0; i < free.size(); ++i) a(free[i]) = std::max(af(i), 0.0);
        const double obj = (x - E * a).squaredNorm();
        if (obj < best) {
            best = obj;
            best_a = a;
        }
    }
    return best_a;
}

}  // namespace

Eigen::VectorXd simplex_ls(const Eigen::MatrixXd& E, const Eigen::VectorXd& x) {
    const int R = static_cast<int>(E.cols());
    if (R < 1) fail("simplex_ls: no endmembers");
    if (E.rows() != x.size()) fail("simplex_ls: dimension mismatch");

    const Eigen::MatrixXd G = E.transpose() * E;
    const Eigen::VectorXd c = E.transpose() * x;

    Eigen::VectorXd a = Eigen::VectorXd::Zero(R);
    std::vector<int> free(R);
    std::iota(free.begin(), free.end(), 0);
    bool solved = false;

    for (int iter = 0; iter < 10 * R + 20 && !solved; ++iter) {
        Eigen::VectorXd af;
        double nu = 0.0;
        if (!solve_scls(G, c, free, af, nu)) {
            a = simplex_ls_enumerate(G, c, 0.0, E, x);
            solved = true;
            break;
        }

        int worst = -1;
        double worst_val = -1e-12;
        for (int i = 0; i < static_cast<int>(free.size()); ++i)
            if (af(i) < worst_val) {
                worst_val = af(i);
                worst = i;
            }
        if (worst >= 0 && free.size() > 1) {
            free.erase(free.begin() + worst);
            continue;
        }

        a.setZero();
        for (std::size_t i = 0; i < free.size(); ++i) a(free[i]) = std::max(af(i), 0.0);

        // KKT check on the zeroed variables; re-enter the most violating one
        const Eigen::VectorXd grad = 2.0 * (G * a - c);
        int enter = -1;
        double most = -1e-9;
        for (int i = 0; i < R; ++i) {
            if (std::find(free.begin(), free.end(), i) != free.end()) continue;
            const double mult = grad(i) - nu;
            if (mult < most) {
                most = mult;
                enter = i;
            }
        }
        if (enter >= 0) {
            free.push_back(enter);
            std::sort(free.begin(), free.end());
            continue;
        }
        solved = true;
    }
    if (!solved) a = simplex_ls_enumerate(G, c, 0.0, E, x);

    // Enforce the invariants exactly.
    for (int i = 0; i < R; ++i) a(i) = std::max(a(i), 0.0);
    const double sum = a.sum();
    if (sum <= 0.0) {
        a.setZero();
        a(0) = 1.0;
    } else {
        a /= sum;
    }
    return a;
}

AbundanceMap spu_abundances(const Eigen::MatrixXd& X, const EndmemberSet& E) {
    if (E.count() < 1) fail("spu_abundances: empty endmember set");
    if (X.rows() != E.spectra.rows()) fail("spu_abundances: band count mismatch");
    AbundanceMap map;
    map.fractions.resize(E.count(), X.cols());
    for (int j = 0; j < X.cols(); ++j) map.fractions.col(j) = simplex_ls(E.spectra, X.col(j));
    return map;
}

FeatureMap abundance_feature_map(const HyperspectralCube& cube, const EndmemberSet& E,
                                 int cell) {
    if (cell < 1) fail("abundance_feature_map: cell size must be >= 1");
    if (E.count() < 1) fail("abundance_feature_map: empty endmember set");
    if (E.spectra.rows() != cube.bands)
        fail("abundance_feature_map: endmember bands do not match cube");

    const int cells_x = sshmg_cells(cube.width, cell);
    const int cells_y = sshmg_cells(cube.height, cell);
    const int R = E.count();

    FeatureMap out;
    out.resize(cells_x, cells_y, R);
    std::vector<int> counts(static_cast<std::size_t>(cells_x) * cells_y, 0);

    Eigen::VectorXd spectrum(cube.bands);
    for (int y = 0; y < cube.height; ++y) {
        const int j = y / cell;
        for (int x = 0; x < cube.width; ++x) {
            const int i = x / cell;
            for (int k = 0; k < cube.bands; ++k) spectrum(k) = cube.at(x, y, k);
            const Eigen::VectorXd a = simplex_ls(E.spectra, spectrum);
            for (int r = 0; r < R; ++r) out.at(i, j, r) += a(r);
            ++counts[static_cast<std::size_t>(j) * cells_x + i];
        }
    }
    for (int c = 0; c < R; ++c)
        for (int j = 0; j < cells_y; ++j)
            for (int i = 0; i < cells_x; ++i) {
                const int n = counts[static_cast<std::size_t>(j) * cells_x + i];
                if (n > 0) out.at(i, j, c) /= n;
            }
    return out;
}

}  // namespace hypertrack
