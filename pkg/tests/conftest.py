"""
Shared fixtures for the gherkin-hdl test suite
"""

import pytest

from gherkin_hdl.forge import parse_prompt, render_feature_text

USER_LOGIN = """\
Feature: User Login
  As a registered user I want to log in

  Scenario: Successful login
    Given the user is on the login page
    When the user enters valid credentials
    Then the user should be redirected to the dashboard
"""

ADD_OUTLINE = """\
# hand-written ADD outline
Feature: 16-bit ALU ADD operation

  Scenario Outline: ADD behaves per specification
    Given the ALU is reset
    And the operands are A = <A> and B = <B>
    When the operation ADD is performed
    Then the result should be <result>
    And the carry flag should be <carry>
    And the zero flag should be <zero>
    And the overflow flag should be <overflow>

    Examples:
      | A      | B      | result | carry | zero | overflow |
      | 5      | 5      | 10     | 0     | 0    | 0        |
      | 0xFFFF | 0x0001 | 0x0000 | 1     | 1    | 0        |
      | 0x7FFF | 0x7FFF | 0xFFFE | 0     | 0    | 1        |
"""

FIVE_PLUS_FIVE_WRONG = """\
Feature: Broken adder expectations

  Scenario: five plus five
    Given the operands are A = 5 and B = 5
    When the operation ADD is performed
    Then the result should be 11
"""

ADD_PROMPT = "Create ADD scenario with A = B, 3 examples."


@pytest.fixture
def user_login_source():
    return USER_LOGIN


@pytest.fixture
def add_outline_source():
    return ADD_OUTLINE


@pytest.fixture
def wrong_sum_source():
    return FIVE_PLUS_FIVE_WRONG


@pytest.fixture
def add_prompt():
    return ADD_PROMPT


@pytest.fixture
def generated_feature_text():
    """Template-engine feature for the ADD prompt at seed 42"""
    return render_feature_text(parse_prompt(ADD_PROMPT), seed=42)


@pytest.fixture
def feature_file(tmp_path):
    """Write feature text under tmp_path and return the path"""

    def _write(text: str, name: str = "alu.feature"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
