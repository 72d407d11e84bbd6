"""Repository classes for database operations.

This module provides the repository pattern implementation for the experiment
run ledger.
"""
from typing import Optional, Sequence

from sqlalchemy import func
from sqlmodel import Session, select

from app.models import ExperimentRun, ExperimentRunCreate


class ExperimentRunRepository:
    """Repository for run-ledger database operations."""

    def __init__(self, session: Session):
        """Initialize the repository with a database session.

        Args:
            session: Active SQLModel database session.
        """
        self.session = session

    def create(self, run_create: ExperimentRunCreate) -> ExperimentRun:
        """Record a new run.

        Args:
            run_create: Run creation schema.

        Returns:
            ExperimentRun: The stored run with ID.
        """
        run = ExperimentRun.model_validate(run_create, from_attributes=True)
        self.session.add(run)
        self.session.commit()
        self.session.refresh(run)
        return run

    def get_by_id(self, run_id: int) -> Optional[ExperimentRun]:
        """Get a run by its ID.

        Args:
            run_id: The run's unique ID.

        Returns:
            Optional[ExperimentRun]: The run if found, None otherwise.
        """
        return self.session.get(ExperimentRun, run_id)

    def get_all(
        self,
        command: Optional[str] = None,
        skip: int = 0,
        limit: int = 10,
    ) -> Sequence[ExperimentRun]:
        """Get recorded runs, newest first, with optional filtering.

        Args:
            command: Optional filter by subcommand prefix (case-insensitive).
            skip: Number of records to skip for pagination.
            limit: Maximum number of records to return.

        Returns:
            Sequence[ExperimentRun]: Runs matching the criteria.
        """
        statement = select(ExperimentRun)
        if command:
            statement = statement.where(
                func.lower(ExperimentRun.command).like(f"{command.lower()}%")
            )
        statement = (
            statement.order_by(ExperimentRun.created_at.desc(), ExperimentRun.id.desc())
            .offset(skip)
            .limit(limit)
        )
        return self.session.exec(statement).all()

    def count_by_command(self, command: str) -> int:
        """Count runs of one subcommand.

        Args:
            command: Exact subcommand path.

        Returns:
            int: Number of recorded runs.
        """
        statement = select(func.count(ExperimentRun.id)).where(
            ExperimentRun.command == command
        )
        return self.session.exec(statement).one()

    def delete(self, run_id: int) -> bool:
        """Delete a recorded run.

        Args:
            run_id: The run's unique ID.

        Returns:
            bool: True if a run was deleted, False if it did not exist.
        """
        run = self.session.get(ExperimentRun, run_id)
        if not run:
            return False
        self.session.delete(run)
        self.session.commit()
        return True
