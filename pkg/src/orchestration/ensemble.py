from typing import Callable, List, Optional, Sequence, TypeVar, Union
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
import logging

from ..core.exceptions import RydbergJumpsError, TrajectoryError
from ..core.models import NoiseMode, ThreeLevelParams, TwoLevelParams
from ..core.series import Trajectory
from ..core.settings import get_settings
from ..dynamics.noise import NoiseSignal
from ..dynamics.three_level import simulate_three_level
from ..dynamics.two_level import integrate_stochastic_two_level

logger = logging.getLogger(__name__)

T = TypeVar("T")


class EnsembleRunner:
    """Runs one job per trajectory index on a thread pool.

    Results are returned in index order, so output never depends on
    completion order or on the number of workers.
    """

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max(1, max_workers or get_settings().threads)
        logger.debug(f"Ensemble runner initialized with {self.max_workers} workers")

    def map(self, job: Callable[[int], T], count: int) -> List[T]:
        if count < 1:
            raise ValueError("an ensemble needs at least one member")

        if self.max_workers == 1:
            return [self._run_one(job, index) for index in range(count)]

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [executor.submit(self._run_one, job, index) for index in range(count)]
            results: List[T] = []
            failure: Optional[TrajectoryError] = None
            for future in futures:
                try:
                    results.append(future.result())
                except TrajectoryError as e:
                    failure = failure or e
            if failure is not None:
                raise failure
            return results

    @staticmethod
    def _run_one(job: Callable[[int], T], index: int) -> T:
        started = datetime.now(timezone.utc)
        try:
            result = job(index)
        except RydbergJumpsError as e:
            logger.error(f"Trajectory {index} failed: {e}")
            raise TrajectoryError(index, e) from e
        elapsed = (datetime.now(timezone.utc) - started).total_seconds()
        logger.debug(f"Trajectory {index} finished in {elapsed:.2f}s")
        return result


def run_ensemble(p: Union[ThreeLevelParams, TwoLevelParams], n_traj: int, base_seed: int,
                 threads: Optional[int] = None, dt_out: Optional[float] = None,
                 noise_mode: NoiseMode = NoiseMode.PER_UNIT_TIME, noise_spacing: float = 10.0,
                 noises: Optional[Sequence[NoiseSignal]] = None) -> List[Trajectory]:
    """Trajectory i is integrated with random stream (base_seed, i).

    `noises` replays recorded white noise for the three-level model, one
    signal per trajectory.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if noises is not None and len(noises) != n_traj:
        raise ValueError(f"expected {n_traj} replay noise signals, got {len(noises)}")

    if isinstance(p, ThreeLevelParams):
        def job(index: int) -> Trajectory:
            return simulate_three_level(p, base_seed, index, noise_mode=noise_mode,
                                        noise_spacing=noise_spacing, dt_out=dt_out,
                                        noise=noises[index] if noises is not None else None)
    elif isinstance(p, TwoLevelParams):
        if noises is not None:
            raise ValueError("noise replay only applies to the three-level model")

        def job(index: int) -> Trajectory:
            return integrate_stochastic_two_level(p, base_seed, index, dt_out=dt_out)
    else:
        raise TypeError(f"Unsupported parameter set {type(p).__name__}")

    runner = EnsembleRunner(threads)
    logger.info(f"Starting ensemble of {n_traj} {type(p).__name__} trajectories "
                f"(seed {base_seed}, {runner.max_workers} workers)")
    trajectories = runner.map(job, n_traj)
    logger.info(f"Ensemble completed: {len(trajectories)} trajectories")
    return trajectories
