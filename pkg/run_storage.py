#!/usr/bin/env python3
"""Registro (ledger) de ejecuciones y repeticiones en SQL."""

import os
from datetime import datetime
from functools import lru_cache
from typing import Any, Dict, List, Optional

from sqlalchemy import DateTime, Float, ForeignKey, Integer, String, UniqueConstraint, create_engine, select
from sqlalchemy.engine import Engine
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship, sessionmaker


def _build_engine_url(run_dir: str) -> str:
    url = os.getenv("MULTIPATH_DATABASE_URL")
    if url:
        return url
    return f"sqlite:///{os.path.abspath(os.path.join(run_dir, 'runs.db'))}"


class Base(DeclarativeBase):
    pass


class RunRecord(Base):
    __tablename__ = "runs"
    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_dir: Mapped[str] = mapped_column(String(512), index=True)
    model: Mapped[str] = mapped_column(String(16))
    variant: Mapped[str] = mapped_column(String(16))
    m: Mapped[int] = mapped_column(Integer)
    iterations: Mapped[int] = mapped_column(Integer)
    seed: Mapped[str] = mapped_column(String(32))
    config_digest: Mapped[str] = mapped_column(String(64))
    dataset_digest: Mapped[Optional[str]] = mapped_column(String(64), nullable=True)
    status: Mapped[str] = mapped_column(String(16), default="running")
    created_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow)
    repetitions: Mapped[List["RepetitionRecord"]] = relationship(
        "RepetitionRecord", back_populates="run", cascade="all, delete-orphan"
    )


class RepetitionRecord(Base):
    __tablename__ = "repetitions"
    __table_args__ = (UniqueConstraint("run_id", "repetition"),)
    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("runs.id"))
    repetition: Mapped[int] = mapped_column(Integer)
    metric: Mapped[str] = mapped_column(String(32))
    value: Mapped[float] = mapped_column(Float)
    duration_ms: Mapped[float] = mapped_column(Float)
    run: Mapped[RunRecord] = relationship("RunRecord", back_populates="repetitions")


@lru_cache(maxsize=None)
def _engine(url: str) -> Engine:
    engine = create_engine(url, echo=False, future=True)
    Base.metadata.create_all(engine)
    return engine


def _session(run_dir: str):
    os.makedirs(run_dir, exist_ok=True)
    engine = _engine(_build_engine_url(run_dir))
    return sessionmaker(bind=engine, autoflush=False, autocommit=False, expire_on_commit=False)()


def record_run(run_dir: str, config: Dict[str, Any], config_digest: str, dataset_digest: Optional[str]) -> int:
    with _session(run_dir) as session:
        run = RunRecord(
            run_dir=os.path.abspath(run_dir),
            model=config["model"],
            variant=config["variant"],
            m=int(config["m"]),
            iterations=int(config["iterations"]),
            seed=str(config["seed"]),
            config_digest=config_digest,
            dataset_digest=dataset_digest,
        )
        session.add(run)
        session.commit()
        return run.id


def record_repetition(run_dir: str, run_id: int, repetition: int, metric: str, value: float, duration_ms: float) -> None:
    with _session(run_dir) as session:
        session.add(RepetitionRecord(
            run_id=run_id,
            repetition=int(repetition),
            metric=metric,
            value=float(value),
            duration_ms=float(duration_ms),
        ))
        session.commit()


def finish_run(run_dir: str, run_id: int, status: str) -> None:
    with _session(run_dir) as session:
        run = session.get(RunRecord, run_id)
        if run is not None:
            run.status = status
            session.commit()


def _repetition_to_dict(r: RepetitionRecord) -> Dict[str, Any]:
    return {
        "run_id": r.run_id,
        "repetition": r.repetition,
        "metric": r.metric,
        "value": r.value,
        "duration_ms": r.duration_ms,
    }


def list_repetitions(run_dir: str, run_id: Optional[int] = None) -> List[Dict[str, Any]]:
    with _session(run_dir) as session:
        query = select(RepetitionRecord).join(RunRecord).where(RunRecord.run_dir == os.path.abspath(run_dir))
        if run_id is not None:
            query = query.where(RepetitionRecord.run_id == run_id)
        rows = session.scalars(query.order_by(RepetitionRecord.run_id, RepetitionRecord.repetition)).all()
        return [_repetition_to_dict(r) for r in rows]


def latest_run(run_dir: str) -> Optional[Dict[str, Any]]:
    with _session(run_dir) as session:
        query = select(RunRecord).where(RunRecord.run_dir == os.path.abspath(run_dir)).order_by(RunRecord.id.desc())
        run = session.scalars(query).first()
        if run is None:
            return None
        return {
            "id": run.id,
            "model": run.model,
            "variant": run.variant,
            "m": run.m,
            "iterations": run.iterations,
            "seed": run.seed,
            "config_digest": run.config_digest,
            "dataset_digest": run.dataset_digest,
            "status": run.status,
            "created_at": run.created_at.isoformat() if run.created_at else None,
        }
