#include "safenet/solver.hpp"

#include "json.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace safenet {

namespace {

// Worker program: reads one JSON request per line on stdin, answers one JSON
// response per line on stdout. It only packs the already-assembled conic data
// into the chosen backend's storage format; all modeling happens on the C++
// side, and all solution checking happens there too.
const char* kWorkerScript = R"PY(
import json
import sys
import time

_backend_cache = {}


def _try_import(name):
    if name in _backend_cache:
        return _backend_cache[name]
    try:
        if name == "clarabel":
            import clarabel  # noqa: F401
        elif name == "cvxopt":
            import cvxopt  # noqa: F401
        _backend_cache[name] = True
    except Exception:
        _backend_cache[name] = False
    return _backend_cache[name]


def choose_backend(requested):
    if requested in ("clarabel", "cvxopt"):
        if not _try_import(requested):
            raise RuntimeError("backend %s is not importable" % requested)
        return requested
    for name in ("clarabel", "cvxopt"):
        if _try_import(name):
            return name
    raise RuntimeError("no conic backend available (tried clarabel, cvxopt)")


def solve_clarabel(req):
    import clarabel
    import numpy as np
    from scipy import sparse

    nvar = req["nvar"]
    rows, cols, data, rhs, cones = [], [], [], [], []
    nrow = 0

    def add_row(const, terms):
        nonlocal nrow
        for v, c in terms:
            rows.append(nrow)
            cols.append(v)
            data.append(-c)
        rhs.append(const)
        nrow += 1

    neq = len(req["lin_eq"])
    for const, terms in req["lin_eq"]:
        add_row(const, terms)
    if neq:
        cones.append(clarabel.ZeroConeT(neq))
    nineq = len(req["lin_ineq"])
    for const, terms in req["lin_ineq"]:
        add_row(const, terms)
    if nineq:
        cones.append(clarabel.NonnegativeConeT(nineq))
    for soc in req["soc"]:
        for const, terms in soc:
            add_row(const, terms)
        cones.append(clarabel.SecondOrderConeT(len(soc)))
    sqrt2 = 2.0 ** 0.5
    for blk in req["psd"]:
        d = blk["dim"]
        base = nrow
        svec_len = d * (d + 1) // 2
        bvals = [0.0] * svec_len
        for r, c, val in blk["k"]:
            bvals[c * (c + 1) // 2 + r] += val * (1.0 if r == c else sqrt2)
        for r, c, v, coef in blk["t"]:
            rows.append(base + c * (c + 1) // 2 + r)
            cols.append(v)
            data.append(-coef * (1.0 if r == c else sqrt2))
        rhs.extend(bvals)
        nrow += svec_len
        cones.append(clarabel.PSDTriangleConeT(d))

    q = np.zeros(nvar)
    for v, c in req["obj"]:
        q[v] += c
    P = sparse.csc_matrix((nvar, nvar))
    A = sparse.csc_matrix((data, (rows, cols)), shape=(nrow, nvar))
    b = np.asarray(rhs, dtype=float)

    settings = clarabel.DefaultSettings()
    settings.verbose = bool(req["settings"].get("verbose", False))
    for attr, key in (
        ("max_iter", "max_iter"),
        ("tol_feas", "feas_tol"),
        ("tol_gap_abs", "gap_tol"),
        ("tol_gap_rel", "gap_tol"),
    ):
        if hasattr(settings, attr) and key in req["settings"]:
            setattr(settings, attr, req["settings"][key])

    solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status)
    status_map = {
        "Solved": "optimal",
        "AlmostSolved": "almost",
        "PrimalInfeasible": "infeasible",
        # a reduced-accuracy infeasibility certificate still means no point
        # came back; callers treat it as an uncertifiable problem either way
        "AlmostPrimalInfeasible": "infeasible",
        "DualInfeasible": "unbounded",
        "AlmostDualInfeasible": "numerical",
    }
    status = status_map.get(name, "numerical")
    out = {"status": status, "msg": name, "iters": int(getattr(sol, "iterations", 0))}
    try:
        out["x"] = [float(v) for v in sol.x]
    except Exception:
        pass
    return out


def solve_cvxopt(req):
    import cvxopt
    import cvxopt.solvers

    nvar = req["nvar"]
    g_rows, g_cols, g_data, h = [], [], [], []
    nrow = 0

    def add_row(const, terms):
        nonlocal nrow
        for v, c in terms:
            g_rows.append(nrow)
            g_cols.append(v)
            g_data.append(-c)
        h.append(const)
        nrow += 1

    dims = {"l": len(req["lin_ineq"]), "q": [], "s": []}
    for const, terms in req["lin_ineq"]:
        add_row(const, terms)
    for soc in req["soc"]:
        for const, terms in soc:
            add_row(const, terms)
        dims["q"].append(len(soc))
    for blk in req["psd"]:
        d = blk["dim"]
        base = nrow
        hvals = [0.0] * (d * d)
        for r, c, val in blk["k"]:
            hvals[c * d + r] += val
            if r != c:
                hvals[r * d + c] += val
        for r, c, v, coef in blk["t"]:
            g_rows.append(base + c * d + r)
            g_cols.append(v)
            g_data.append(-coef)
            if r != c:
                g_rows.append(base + r * d + c)
                g_cols.append(v)
                g_data.append(-coef)
        h.extend(hvals)
        nrow += d * d
        dims["s"].append(d)

    c_vec = [0.0] * nvar
    for v, coef in req["obj"]:
        c_vec[v] += coef
    c = cvxopt.matrix(c_vec)
    G = cvxopt.spmatrix(g_data, g_rows, g_cols, (nrow, nvar))
    hm = cvxopt.matrix(h)

    A = None
    b = None
    if req["lin_eq"]:
        a_rows, a_cols, a_data, b_vals = [], [], [], []
        for row_idx, (const, terms) in enumerate(req["lin_eq"]):
            for v, coef in terms:
                a_rows.append(row_idx)
                a_cols.append(v)
                a_data.append(coef)
            b_vals.append(-const)
        A = cvxopt.spmatrix(a_data, a_rows, a_cols, (len(req["lin_eq"]), nvar))
        b = cvxopt.matrix(b_vals)

    options = {
        "show_progress": bool(req["settings"].get("verbose", False)),
        "maxiters": int(req["settings"].get("max_iter", 200)),
        "abstol": float(req["settings"].get("gap_tol", 1e-9)),
        "reltol": float(req["settings"].get("gap_tol", 1e-9)),
        "feastol": float(req["settings"].get("feas_tol", 1e-9)),
    }
    if A is None:
        sol = cvxopt.solvers.conelp(c, G, hm, dims, options=options)
    else:
        sol = cvxopt.solvers.conelp(c, G, hm, dims, A, b, options=options)
    status_map = {
        "optimal": "optimal",
        "primal infeasible": "infeasible",
        "dual infeasible": "unbounded",
        "unknown": "numerical",
    }
    out = {"status": status_map.get(sol["status"], "numerical"), "msg": sol["status"], "iters": 0}
    if sol["x"] is not None:
        out["x"] = [float(v) for v in sol["x"]]
    return out


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except Exception as exc:
            sys.stdout.write(json.dumps({"id": -1, "status": "error", "msg": "bad request: %s" % exc}) + "\n")
            sys.stdout.flush()
            continue
        op = req.get("op", "solve")
        if op == "exit":
            return
        if op == "ping":
            try:
                out = {"id": req.get("id", -1), "status": "ok", "backend": choose_backend(req.get("backend", "auto"))}
            except Exception as exc:
                out = {"id": req.get("id", -1), "status": "error", "msg": str(exc)}
            sys.stdout.write(json.dumps(out) + "\n")
            sys.stdout.flush()
            continue
        t0 = time.time()
        try:
            backend = choose_backend(req["settings"].get("backend", "auto"))
            out = solve_clarabel(req) if backend == "clarabel" else solve_cvxopt(req)
            out["backend"] = backend
        except Exception as exc:
            out = {"status": "error", "msg": "%s: %s" % (type(exc).__name__, exc)}
        out["id"] = req.get("id", -1)
        out["time"] = time.time() - t0
        sys.stdout.write(json.dumps(out) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
)PY";

nlohmann::json terms_json(const std::vector<LinTerm>& terms) {
  nlohmann::json out = nlohmann::json::array();
  for (const LinTerm& t : terms) out.push_back(nlohmann::json::array({t.var, t.coef}));
  return out;
}

nlohmann::json row_json(const LinExpr& e) {
  return nlohmann::json::array({e.constant, terms_json(e.terms)});
}

nlohmann::json encode_problem(const SdpProblem& p, const SolverOptions& opts, std::uint64_t id) {
  nlohmann::json lin_eq = nlohmann::json::array();
  nlohmann::json lin_ineq = nlohmann::json::array();
  for (const LinearRow& row : p.linear_rows()) {
    (row.equality ? lin_eq : lin_ineq).push_back(row_json(row.expr));
  }
  nlohmann::json socs = nlohmann::json::array();
  for (const SocBlock& soc : p.socs()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const LinExpr& e : soc.rows) rows.push_back(row_json(e));
    socs.push_back(std::move(rows));
  }
  nlohmann::json psd = nlohmann::json::array();
  for (const LmiBlock& blk : p.lmis()) {
    nlohmann::json konst = nlohmann::json::array();
    for (const ConstEntry& e : blk.const_upper) konst.push_back(nlohmann::json::array({e.r, e.c, e.value}));
    nlohmann::json tvar = nlohmann::json::array();
    for (const VarEntry& e : blk.var_upper) tvar.push_back(nlohmann::json::array({e.r, e.c, e.var, e.coef}));
    psd.push_back(nlohmann::json{{"dim", blk.dim}, {"k", std::move(konst)}, {"t", std::move(tvar)}});
  }
  return nlohmann::json{{"id", id},
                        {"op", "solve"},
                        {"nvar", p.var_count()},
                        {"obj", terms_json(p.objective())},
                        {"lin_eq", std::move(lin_eq)},
                        {"lin_ineq", std::move(lin_ineq)},
                        {"soc", std::move(socs)},
                        {"psd", std::move(psd)},
                        {"settings",
                         {{"backend", opts.backend},
                          {"max_iter", opts.max_iter},
                          {"feas_tol", opts.feas_tol},
                          {"gap_tol", opts.gap_tol},
                          {"verbose", opts.verbose}}}};
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SdpSolver::Worker {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string script_path;
  std::string python;
  std::uint64_t next_id = 1;
  std::string read_buffer;

  ~Worker() { shutdown(); }

  void shutdown() {
    if (to_child >= 0) {
      ::close(to_child);
      to_child = -1;
    }
    if (from_child >= 0) {
      ::close(from_child);
      from_child = -1;
    }
    if (pid > 0) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      pid = -1;
    }
    if (!script_path.empty()) {
      ::unlink(script_path.c_str());
      script_path.clear();
    }
  }

  bool alive() const { return pid > 0; }

  void write_script() {
    char tmpl[] = "/tmp/safenet_solver_XXXXXX.py";
    const int fd = ::mkstemps(tmpl, 3);
    if (fd < 0) throw std::runtime_error("solver worker: mkstemps failed: " + std::string(std::strerror(errno)));
    const std::string script(kWorkerScript);
    std::size_t off = 0;
    while (off < script.size()) {
      const ssize_t n = ::write(fd, script.data() + off, script.size() - off);
      if (n < 0) {
        ::close(fd);
        throw std::runtime_error("solver worker: failed to write script");
      }
      off += static_cast<std::size_t>(n);
    }
    ::close(fd);
    script_path = tmpl;
  }

  void spawn() {
    if (script_path.empty()) write_script();
    // O_CLOEXEC keeps these descriptors out of any other worker forked later:
    // a leaked write end would otherwise hold a sibling's stdin open forever
    // and turn its shutdown (EOF then waitpid) into a deadlock.
    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw std::runtime_error("solver worker: pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw std::runtime_error("solver worker: pipe failed");
    }
    pid = ::fork();
    if (pid < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      throw std::runtime_error("solver worker: fork failed");
    }
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      ::execlp(python.c_str(), python.c_str(), "-u", script_path.c_str(), static_cast<char*>(nullptr));
      std::fprintf(stderr, "solver worker: exec %s failed: %s\n", python.c_str(), std::strerror(errno));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child = in_pipe[1];
    from_child = out_pipe[0];
    read_buffer.clear();
  }

  void kill_worker() {
    if (pid > 0) ::kill(pid, SIGKILL);
    shutdown_keep_script();
  }

  void shutdown_keep_script() {
    if (to_child >= 0) {
      ::close(to_child);
      to_child = -1;
    }
    if (from_child >= 0) {
      ::close(from_child);
      from_child = -1;
    }
    if (pid > 0) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      pid = -1;
    }
  }

  bool send_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t off = 0;
    while (off < payload.size()) {
      const ssize_t n = ::write(to_child, payload.data() + off, payload.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  // Reads one newline-terminated response; empty string on EOF or timeout.
  std::string read_line(double timeout_seconds) {
    while (true) {
      const std::size_t pos = read_buffer.find('\n');
      if (pos != std::string::npos) {
        std::string line = read_buffer.substr(0, pos);
        read_buffer.erase(0, pos + 1);
        return line;
      }
      struct pollfd pfd {};
      pfd.fd = from_child;
      pfd.events = POLLIN;
      const int timeout_ms = timeout_seconds > 0 ? static_cast<int>(timeout_seconds * 1000.0) : -1;
      const int pr = ::poll(&pfd, 1, timeout_ms);
      if (pr == 0) return {};  // timeout
      if (pr < 0) {
        if (errno == EINTR) continue;
        return {};
      }
      char chunk[65536];
      const ssize_t n = ::read(from_child, chunk, sizeof(chunk));
      if (n <= 0) return {};  // EOF
      read_buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

SdpSolver::SdpSolver(SolverOptions options) : options_(std::move(options)), worker_(new Worker) {
  if (const char* env = std::getenv("SAFENET_PYTHON"); env != nullptr && *env != '\0') options_.python = env;
  if (const char* env = std::getenv("SAFENET_SOLVER_VERBOSE"); env != nullptr && *env == '1') options_.verbose = true;
  worker_->python = options_.python;
  // A worker that dies mid-request must surface as an error, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
}

SdpSolver::~SdpSolver() = default;

std::string SdpSolver::probe_backend() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!worker_->alive()) worker_->spawn();
  nlohmann::json req{{"op", "ping"}, {"id", worker_->next_id++}, {"backend", options_.backend}};
  if (!worker_->send_line(req.dump())) throw std::runtime_error("solver worker: cannot reach worker process");
  const std::string line = worker_->read_line(options_.timeout_seconds);
  if (line.empty()) throw std::runtime_error("solver worker: no response to ping");
  const nlohmann::json resp = nlohmann::json::parse(line);
  if (resp.at("status").get<std::string>() != "ok")
    throw std::runtime_error("solver worker: " + resp.value("msg", std::string("backend probe failed")));
  return resp.at("backend").get<std::string>();
}

namespace {

// Like SdpProblem::residuals, but every violation is judged relative to the
// magnitude of the data that formed its constraint — the usual |A||x| + |b|
// backward-error normalization. An eigenvalue dip of 1e-6 on a block
// assembled from terms of order 100, or a linear-row defect of 2e-8 on a
// row whose offsets are at state-space scale, is backend round-off; the
// same numbers on unit-scale constraints are real defects. The scale sums
// term magnitudes (|C| + Σ |coef·x_var|), not the evaluated result, so an
// active budget block whose large terms cancel to ~0 still reads at the
// scale of those terms.
ResidualReport scale_aware_residuals(const SdpProblem& problem, const Vector& values) {
  ResidualReport rep;
  auto consider = [&rep](double violation, const std::string& label) {
    if (violation > rep.worst_violation) {
      rep.worst_violation = violation;
      rep.worst_label = label;
    }
  };
  // Scalar rows measure against their data magnitude times the global
  // solution magnitude (the normalized primal-residual convention): a row
  // active at zero, like a witness coordinate pinned to a degenerate box
  // face, carries backend noise proportional to the whole solution's scale,
  // not to its own (zero) value.
  const double xinf = values.size() > 0 ? values.cwiseAbs().maxCoeff() : 0.0;
  auto expr_scale = [&](const LinExpr& e) {
    double s = std::abs(e.constant);
    for (const LinTerm& t : e.terms) s += std::abs(t.coef) * xinf;
    return s;
  };
  for (const LmiBlock& block : problem.lmis()) {
    Matrix summed = Matrix::Zero(block.dim, block.dim);
    for (const ConstEntry& e : block.const_upper) summed(e.r, e.c) += std::abs(e.value);
    for (const VarEntry& e : block.var_upper) summed(e.r, e.c) += std::abs(e.coef * values[e.var]);
    const double scale = 1.0 + (summed.size() > 0 ? summed.maxCoeff() : 0.0);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(block.evaluate(values));
    const double violation = std::max(0.0, -eig.eigenvalues().minCoeff()) / scale;
    rep.max_psd_violation = std::max(rep.max_psd_violation, violation);
    consider(violation, block.label);
  }
  for (const LinearRow& row : problem.linear_rows()) {
    const double v = row.evaluate(values);
    const double scale = 1.0 + expr_scale(row.expr);
    const double violation = (row.equality ? std::abs(v) : std::max(0.0, -v)) / scale;
    rep.max_linear_violation = std::max(rep.max_linear_violation, violation);
    consider(violation, row.label);
  }
  for (const SocBlock& block : problem.socs()) {
    double scale = 1.0;
    for (const LinExpr& e : block.rows) scale += expr_scale(e);
    const double violation = std::max(0.0, -block.margin(values)) / scale;
    rep.max_soc_violation = std::max(rep.max_soc_violation, violation);
    consider(violation, block.label);
  }
  return rep;
}

}  // namespace

SolveResult SdpSolver::solve(const SdpProblem& problem) const {
  std::lock_guard<std::mutex> lock(mutex_);
  SolveResult result;

  const std::uint64_t id = worker_->next_id++;
  const std::string request = encode_problem(problem, options_, id).dump();

  std::string line;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!worker_->alive()) worker_->spawn();
    if (!worker_->send_line(request)) {
      worker_->shutdown_keep_script();
      continue;
    }
    line = worker_->read_line(options_.timeout_seconds);
    if (!line.empty()) break;
    // EOF (worker crashed) or timeout: reset the process, retry once.
    worker_->kill_worker();
  }
  if (line.empty()) {
    result.message = "solver worker produced no response (crash or timeout)";
    return result;
  }

  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    result.message = std::string("solver worker returned malformed response: ") + e.what();
    return result;
  }

  const std::string status = resp.value("status", std::string("error"));
  result.message = resp.value("msg", std::string());
  result.backend = resp.value("backend", std::string());
  result.iterations = resp.value("iters", 0);
  result.solve_seconds = resp.value("time", 0.0);

  if (resp.contains("x")) {
    const auto& xs = resp.at("x");
    if (static_cast<int>(xs.size()) == problem.var_count()) {
      result.values = Vector(problem.var_count());
      for (int k = 0; k < problem.var_count(); ++k) result.values[k] = xs.at(k).get<double>();
    }
  }

  if (status == "infeasible") {
    result.status = SolveStatus::Infeasible;
    result.values = Vector();
    return result;
  }
  if (status == "unbounded") {
    result.status = SolveStatus::NumericalFailure;
    result.message = "problem is unbounded below: " + result.message;
    result.values = Vector();
    return result;
  }
  if (status != "optimal" && status != "almost") {
    result.status = SolveStatus::NumericalFailure;
    if (result.message.empty()) result.message = "backend status: " + status;
    return result;
  }
  if (!result.has_point()) {
    result.status = SolveStatus::NumericalFailure;
    result.message = "backend reported success but returned no point";
    return result;
  }

  // Never trust the backend's own report: recompute every residual here and
  // demote solutions that do not check out. PSD violations are judged
  // relative to the block's own magnitude (see scale_aware_residuals).
  result.residual = scale_aware_residuals(problem, result.values);
  result.objective = problem.objective_value(result.values);
  if (result.residual.within(options_.tol_psd, options_.tol_linear)) {
    result.status = SolveStatus::Optimal;
    if (status == "almost") result.message = "accepted near-optimal point: " + result.message;
  } else {
    result.status = SolveStatus::NumericalFailure;
    char v[160];
    std::snprintf(v, sizeof(v), "psd %.3e vs %.3e, linear %.3e vs %.3e, soc %.3e vs %.3e; worst: ",
                  result.residual.max_psd_violation, options_.tol_psd, result.residual.max_linear_violation,
                  options_.tol_linear, result.residual.max_soc_violation, options_.tol_linear);
    result.message = "solution residuals exceed tolerances (" + std::string(v) + result.residual.worst_label + ")";
  }
  return result;
}

}  // namespace safenet
