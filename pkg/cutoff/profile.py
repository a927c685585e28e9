from . gelfand import ehrenfest_profile_point
from . gibbs import gibbs_model, gibbs_hypotheses, gibbs_profile_point
from . hypercube import hypercube_profile_point, hypercube_exact_tv, FOURIER_MAX_N
from . report import RunRecord, write_table
from . symmetric import kcycle_profile_point, kcycle_exact_tv, CHARACTER_MAX_N
from . util import UsageError

COLUMNS = ('c', 't', 'realized_c', 'exact_tv', 'main_term', 'error_term', 'limit_value', 'gap')


def _point_function(settings):
    family = settings.family
    if family == 'gibbs':
        settings.require('n1', 'n2')
        model = gibbs_model(settings.n1, settings.n2, settings.p)
        found = gibbs_hypotheses(model)
        settings.logger.info(f'{model}: min(p,1-p)*n = {found.min_side:.6g}, alpha*n = {found.centering:.6g}')
        return lambda c: gibbs_profile_point(model, c, M=settings.truncation, epsilon=settings.epsilon)
    settings.require('n')
    if family == 'kcycle':
        return lambda c: kcycle_profile_point(settings.n, settings.k, c, M=settings.truncation)
    if family == 'ehrenfest':
        return lambda c: ehrenfest_profile_point(settings.n, settings.m, c, M=settings.truncation, epsilon=settings.epsilon)
    if family == 'hypercube':
        return lambda c: hypercube_profile_point(settings.n, c)
    raise UsageError(f'unknown family: {family}')


def _exact_tv(settings, t):
    """The exact TV as a reduced fraction, for the families with a rational pipeline."""
    if settings.family == 'kcycle' and settings.n <= CHARACTER_MAX_N:
        return kcycle_exact_tv(settings.n, settings.k, t)
    if settings.family == 'hypercube' and settings.n <= FOURIER_MAX_N:
        return hypercube_exact_tv(settings.n, t, method='fourier', exact=True)
    raise UsageError('--mode exact needs a kcycle profile with n <= 14 or a hypercube profile with n <= 64')


def profile_rows(settings):
    point_at = _point_function(settings)
    rows = []
    for c in sorted(settings.c_values()):
        with settings.stats.duration(f'{settings.family} profile point'):
            point = point_at(c)
        settings.logger.debug(f'c={c} t={point.t} tv={point.exact_tv:.6g} limit={point.limit_value:.6g}')
        exact_tv = str(_exact_tv(settings, point.t)) if settings.exact else point.exact_tv
        rows.append((point.c, point.t, point.realized_c, exact_tv, point.main_term, point.error_term,
                     point.limit_value, point.gap))
    return rows


def cmd_profile(settings):
    rows = profile_rows(settings)
    write_table(RunRecord.from_settings(settings), COLUMNS, rows, settings)
    return 0
