"""End-to-end dimension pipeline for a system with a verified connection.

certificate -> fold segment -> branch family -> index cutoff -> inverse
contractions -> Moran/pressure report -> covers, scaffold and Cantor
certificate -> box-counting cross-check.  Each stage output is kept on the
result object so tests and the front end can interrogate any of them.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import cifs, oracle, returnmap
from .errors import SlidimError


@dataclass
class DimensionPipelineResult:
    cert: object
    fold: object
    branches: list
    i_min: int
    a_hat: float
    lambda_estimates: dict
    roundtrip: np.ndarray
    ifs: cifs.IfsSystem
    report: cifs.DimensionReport
    covers_decay: list
    covers_cantor: list
    scaffold: object
    cantor: cifs.CantorCertificate
    box_fit: oracle.BoxCountFit
    verdict: oracle.Verdict
    decay_subsystem_sum_c: float
    timings: dict = field(default_factory=dict)


def _subsystem(maps_by_branch, per_side):
    """The strongest ``per_side`` contractions of each side, as an IfsSystem."""
    chosen = []
    for side in ("L", "R"):
        side_maps = [cm for br, cm in maps_by_branch if br.side == side]
        side_maps.sort(key=lambda m: -(m.image[1] - m.image[0]))
        chosen.extend(side_maps[:per_side])
    return cifs.IfsSystem(sorted(chosen, key=lambda m: m.image[0]))


def branch_ifs(branches, maps, lam, a_hat, i_tail_start):
    """Wrap inverse-branch realizations as a contraction system with tail."""
    cms = []
    for br, m in zip(branches, maps):
        cms.append(cifs.ContractionMap(
            eval=m, image=br.interval, b=br.deriv_lo, c=br.deriv_hi,
            deriv=m.deriv, tag=f"{br.side}{br.index}"))
    tail = cifs.TailModel(a=a_hat, lam=lam, i_start=i_tail_start)
    return cifs.IfsSystem(sorted(cms, key=lambda m: m.image[0]), tail)


def run_dimension_pipeline(system, p_seed, q_seed, *, radius=0.25, i_max=3,
                           n_scan=20000, cover_depth=8, cover_per_side=2,
                           cantor_depth=6, cantor_per_side=2, box_depth=5,
                           roundtrip_budget=1e-9, lambda_rel=0.10, band=0.03,
                           schedule=None):
    """Full analysis for one system; deterministic for fixed arguments."""
    timings = {}
    t0 = time.time()
    cert = returnmap.verify_connection(system, p_seed, q_seed)
    fold = returnmap.build_fold_segment(system, cert.q, radius)
    timings["certificate"] = time.time() - t0

    t0 = time.time()
    branches = returnmap.enumerate_branches(system, fold, cert, i_max, n_scan)
    timings["branches"] = time.time() - t0

    lam_width = returnmap.branch_width_lambda(branches)
    lambdas = {"eigenvalue": cert.lambda_hat, "backward_decay": cert.lambda_decay,
               "branch_widths": lam_width}
    returnmap.check_lambda_agreement(list(lambdas.values()), lambda_rel)

    i_min, a_hat = returnmap.select_u(branches, cert.lambda_hat)
    selected = [b for b in branches if b.index >= i_min]

    t0 = time.time()
    inv_maps = returnmap.branch_contractions(selected)
    resid = returnmap.validate_inverse_maps(returnmap.precise(system), fold,
                                            cert, selected, inv_maps)
    if resid.max() > roundtrip_budget:
        raise SlidimError(
            f"inverse-branch round trip {resid.max():.2e} above {roundtrip_budget:.0e}")
    timings["inverses"] = time.time() - t0

    ifs = branch_ifs(selected, inv_maps, cert.lambda_hat, a_hat, i_max + 1)
    cifs.check_conditions(ifs)
    report = cifs.dimension_report(ifs, schedule=schedule)

    t0 = time.time()
    sorted_branches = sorted(selected, key=lambda b: b.interval[0])
    pairs = list(zip(sorted_branches, ifs.maps))
    decay_sub = _subsystem(pairs, cover_per_side)
    covers_decay = [cifs.attractor_iterate(decay_sub, j) for j in range(1, cover_depth + 1)]
    # depth-resolvable certificate family: chains through the thinnest
    # branches drop below float resolution, so the certificate runs on the
    # strongest contractions of each side
    cantor_sub = _subsystem(pairs, cantor_per_side)
    covers_cantor = [cifs.attractor_iterate(cantor_sub, j) for j in range(1, cantor_depth + 1)]
    scaffold = cifs.closure_scaffold(cantor_sub, 0.0, cantor_depth)
    cantor = cifs.cantor_certify(covers_cantor, scaffold)
    timings["covers"] = time.time() - t0

    sample = oracle.sample_word_images(ifs, box_depth)
    box_fit = oracle.box_counting(sample)
    sum_c = float(sum(m.c for m in decay_sub.maps))
    verdict = oracle.crosscheck(report, sample, covers_decay,
                                band=band, decay_cap=sum_c + 1e-9)
    return DimensionPipelineResult(
        cert=cert, fold=fold, branches=branches, i_min=i_min, a_hat=a_hat,
        lambda_estimates=lambdas, roundtrip=resid, ifs=ifs, report=report,
        covers_decay=covers_decay, covers_cantor=covers_cantor,
        scaffold=scaffold, cantor=cantor, box_fit=box_fit, verdict=verdict,
        decay_subsystem_sum_c=sum_c, timings=timings)


def return_map_fn(system, fold, cert, t_slide_max=None):
    """Batched first-return callable with the (values, ok) contract."""
    if t_slide_max is None:
        t_slide_max = 12 * cert.flight_time_scale

    def pi(points):
        vals, _, ok, _ = returnmap.first_return_batch(
            system, fold, np.asarray(points, dtype=float), cert.p, t_slide_max)
        return vals, ok

    return pi


def forward_backward_check(system, result, k=3, n_points=10000, collar=1e-8,
                           seed=0, threshold=0.999):
    """Criterion-style equivalence check on the pipeline's branch system."""
    pi = return_map_fn(system, result.fold, result.cert)
    return cifs.verify_forward_backward(pi, result.ifs, k, n_points=n_points,
                                        collar=collar, seed=seed,
                                        threshold=threshold)


# --- analytic fixture pipeline ------------------------------------------------------


@dataclass
class FixturePipelineResult:
    ifs: cifs.IfsSystem
    report: cifs.DimensionReport
    covers: list
    scaffold: object
    cantor: cifs.CantorCertificate
    box_fit: oracle.BoxCountFit
    verdict: oracle.Verdict
    sum_c: float


def run_fixture_pipeline(ifs, *, cover_depth=12, box_depth=12, band=0.03):
    """The same report/cover/oracle chain for an analytic contraction system."""
    cifs.check_conditions(ifs)
    report = cifs.dimension_report(ifs)
    covers = [cifs.attractor_iterate(ifs, j) for j in range(1, cover_depth + 1)]
    scaffold = cifs.closure_scaffold(ifs, 0.0, min(cover_depth, 8))
    cantor = cifs.cantor_certify(covers, scaffold)
    sample = oracle.sample_word_images(ifs, box_depth)
    box_fit = oracle.box_counting(sample)
    sum_c = float(sum(m.c for m in ifs.maps))
    verdict = oracle.crosscheck(report, sample, covers, band=band,
                                decay_cap=sum_c + 1e-9)
    return FixturePipelineResult(ifs, report, covers, scaffold, cantor,
                                 box_fit, verdict, sum_c)
