"""
Accessor methods bound to pd.DataFrame.qng
"""

from typing import Optional

import numpy as np
import pandas as pd

CELL = ["n_qubits", "depth", "method"]


@pd.api.extensions.register_dataframe_accessor("qng")
class QngDataFrameAccessor:
    """Accessor class for methods invoked as :code:`pd.DataFrame(...).qng.*`.
    The frame is expected to hold result rows as produced by
    :meth:`qaoa_qng.experiments.BenchmarkResult.table`. This class should not
    be instantiated directly; it should be used via Pandas' accessor API
    """

    def __init__(self, pandas_obj: pd.DataFrame):
        missing = set(CELL + ["best_accuracy"]) - set(pandas_obj.columns)
        if missing:
            raise AttributeError(f"result table lacks columns {sorted(missing)}")
        self._obj = pandas_obj

    def _completed(self) -> pd.DataFrame:
        df = self._obj
        if "error" in df.columns:
            df = df[df["error"].fillna("") == ""]
        if "steps" in df.columns:
            df = df.assign(steps=pd.to_numeric(df["steps"]))
        return df

    def convergence_summary(self, threshold: Optional[float] = None) -> pd.DataFrame:
        """Steps and convergence rate per (N, P, method).

        A trial counts as a success when its best accuracy is below
        :threshold, or as recorded in the ``success`` column when no
        threshold is given. Step statistics are over successful trials
        only; the rate is over all trials of the cell, failed runs included.

        >>> import pandas as pd
        >>> import qaoa_qng  # registers the accessor
        >>> df = pd.DataFrame(
        ...     {
        ...         "n_qubits": [4, 4, 4],
        ...         "depth": [2, 2, 2],
        ...         "method": ["qng-full"] * 3,
        ...         "steps": [10, 20, 500],
        ...         "best_accuracy": [1e-10, 1e-11, 1e-3],
        ...     }
        ... )
        >>> summary = df.qng.convergence_summary(threshold=1e-9)
        >>> summary["successes"].tolist(), round(float(summary["rate"].iloc[0]), 4)
        ([2], 0.6667)
        >>> summary["mean_steps"].tolist()
        [15.0]
        """
        all_rows = self._obj
        df = self._completed()
        if threshold is not None:
            success = df["best_accuracy"] < threshold
        else:
            success = df["success"].astype(bool)
        df = df.assign(_success=success)
        trials = all_rows.groupby(CELL).size().rename("trials")
        successes = df.groupby(CELL)["_success"].sum().rename("successes")
        steps = df[df["_success"]].groupby(CELL)["steps"].agg(["mean", "std"])
        steps.columns = ["mean_steps", "std_steps"]
        out = pd.concat([trials, successes], axis=1)
        out["successes"] = out["successes"].fillna(0).astype(int)
        out["rate"] = out["successes"] / out["trials"]
        return out.join(steps)

    def accuracy_summary(self) -> pd.DataFrame:
        """Distribution of the best accuracy per (N, P, method): count,
        median, quartiles and extremes."""
        grouped = self._completed().groupby(CELL)["best_accuracy"]
        out = grouped.agg(["count", "median", "min", "max"])
        out["q25"] = grouped.quantile(0.25)
        out["q75"] = grouped.quantile(0.75)
        return out[["count", "median", "q25", "q75", "min", "max"]]

    def fidelity_summary(self) -> pd.DataFrame:
        """Fidelity with the ground state per (N, P, method): median,
        quartiles and best trial."""
        df = self._completed()
        if "fidelity" not in df.columns:
            raise AttributeError("result table lacks a 'fidelity' column")
        grouped = df.groupby(CELL)["fidelity"]
        out = grouped.agg(["count", "median", "max"])
        out["q25"] = grouped.quantile(0.25)
        out["q75"] = grouped.quantile(0.75)
        return out[["count", "median", "q25", "q75", "max"]]

    def best_depth(self) -> pd.Series:
        """Depth with the highest median fidelity for each (N, method)."""
        summary = self.fidelity_summary().reset_index()
        idx = summary.groupby(["n_qubits", "method"])["median"].idxmax()
        return summary.loc[idx].set_index(["n_qubits", "method"])["depth"].astype(np.int64)
