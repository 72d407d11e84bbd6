"""Database configuration for the run ledger.

This module handles the connection setup and table
initialization of the experiment run ledger.
"""
from sqlmodel import SQLModel, create_engine

from config import DATABASE_URL, DEBUG

if not DATABASE_URL:
    raise ValueError(
        "DATABASE_URL environment variable is empty. "
        "Please configure your .env file with DATABASE_URL."
    )


def connect_args_for(url: str) -> dict:
    """Driver arguments for a ledger URL.

    Only SQLite needs ``check_same_thread`` disabled; PostgreSQL URLs are
    handed to psycopg2 unchanged.
    """
    return {"check_same_thread": False} if url.startswith("sqlite") else {}


# Create database engine with appropriate configuration
engine = create_engine(DATABASE_URL, echo=DEBUG, connect_args=connect_args_for(DATABASE_URL))


def create_db_and_tables():
    """Create all ledger tables based on SQLModel definitions.

    Called by the command line before the first run is recorded.
    """
    SQLModel.metadata.create_all(engine)
