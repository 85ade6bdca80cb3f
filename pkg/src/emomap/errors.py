"""Domain errors.

Every error carries a stable machine-readable ``code`` so API clients and
the CLI can map failures to localized messages without parsing prose.
"""

from __future__ import annotations


class EmomapError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__doc__ or self.code)
        self.message = message or (self.__doc__ or self.code)
        self.details = details


# --- wheel geometry ---------------------------------------------------------

class CenterAmbiguous(EmomapError):
    """Placement too close to the wheel center to have a defined sector."""

    code = "center_ambiguous"


class OutOfDisc(EmomapError):
    """Placement lies outside the unit disc."""

    code = "out_of_disc"


class InvalidTagMap(EmomapError):
    """Tag map violates one or more structural invariants."""

    code = "invalid_tag_map"

    def __init__(self, violations, message: str = ""):
        super().__init__(message or f"tag map invalid: {[v.code for v in violations]}")
        self.violations = list(violations)


# --- experiment lifecycle ---------------------------------------------------

class InvalidSchedule(EmomapError):
    """Experiment start time must precede finish time."""

    code = "invalid_schedule"


class UnknownTagMap(EmomapError):
    """Referenced tag map does not exist."""

    code = "unknown_tag_map"


class ModeImmutable(EmomapError):
    """Experiment mode is fixed at creation and can never change."""

    code = "mode_immutable"


class ExperimentFinished(EmomapError):
    """Finished experiments accept no further changes."""

    code = "experiment_finished"


class ExperimentNotActive(EmomapError):
    """Experiment is not active (state or schedule window)."""

    code = "experiment_not_active"


class NoPictures(EmomapError):
    """Curated experiments need at least one picture before activation."""

    code = "no_pictures"


class WrongMode(EmomapError):
    """Operation is not available in this experiment mode."""

    code = "wrong_mode"


class UnknownExperiment(EmomapError):
    """Referenced experiment does not exist."""

    code = "unknown_experiment"


class UnknownParticipant(EmomapError):
    """Referenced participant does not exist or is not assigned."""

    code = "unknown_participant"


class UnknownPicture(EmomapError):
    """Referenced picture does not exist in this experiment."""

    code = "unknown_picture"


class ParticipantNotAssigned(EmomapError):
    """Participant is not assigned to the experiment."""

    code = "participant_not_assigned"


# --- credentials and sessions -----------------------------------------------

class BadCredentials(EmomapError):
    """Username or password did not verify."""

    code = "bad_credentials"


class TokenExpired(EmomapError):
    """Invitation token has expired."""

    code = "token_expired"


class NoSession(EmomapError):
    """No live session for this credential."""

    code = "no_session"


# --- ingest -------------------------------------------------------------------

class MissingLocation(EmomapError):
    """Field-mode records require geographic coordinates."""

    code = "missing_location"


class ImageTooLarge(EmomapError):
    """Uploaded image exceeds the configured size limit."""

    code = "image_too_large"


class UndecodableImage(EmomapError):
    """Uploaded bytes are not a decodable JPEG or PNG image."""

    code = "undecodable_image"


# --- aggregation --------------------------------------------------------------

class EmptyInput(EmomapError):
    """Cannot summarize an empty event list."""

    code = "empty_input"


class InvalidCellSize(EmomapError):
    """Grid cell size must be in (0, 10] degrees."""

    code = "invalid_cell_size"


# --- storage ------------------------------------------------------------------

class StorageFull(EmomapError):
    """Underlying volume has no space left."""

    code = "storage_full"


class SerializationFailure(EmomapError):
    """Record could not be serialized to a single line."""

    code = "serialization_failure"


class CorruptRecord(EmomapError):
    """Event log contains an unparseable complete line."""

    code = "corrupt_record"

    def __init__(self, path, line_number: int, reason: str = ""):
        super().__init__(f"corrupt record in {path} at line {line_number}: {reason}")
        self.path = path
        self.line_number = line_number


class StoreLocked(EmomapError):
    """Another process holds the store write lock."""

    code = "store_locked"
