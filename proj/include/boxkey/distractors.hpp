#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "boxkey/errors.hpp"

namespace boxkey {

// Bundled pool of neutral filler sentences used as step distractors when no
// user-supplied sentence file is given.
inline const std::vector<std::string>& bundled_distractor_pool() {
    static const std::vector<std::string> pool = {
        "It is a nice day!",
        "The train arrived exactly on time this morning.",
        "She bought three apples at the corner market.",
        "A light rain fell over the harbor all afternoon.",
        "The committee will meet again next Thursday.",
        "He painted the fence a pale shade of green.",
        "The library closes at nine on weekdays.",
        "A gray cat slept on the warm windowsill.",
        "The orchestra rehearsed the same passage twice.",
        "Fresh bread was cooling on the kitchen counter.",
        "The road to the lake was repaved last summer.",
        "Children played football in the park until dusk.",
        "The museum added a new wing for photography.",
        "Her garden produced more tomatoes than expected.",
        "The ferry crossing takes about forty minutes.",
        "A kettle whistled softly in the back room.",
        "The professor posted the reading list online.",
        "Two sparrows argued over a crust of bread.",
        "The bakery on Main Street smells of cinnamon.",
        "He repaired the old clock with borrowed tools.",
        "The valley was quiet except for the river.",
        "A delivery van idled outside the bookshop.",
        "The choir practiced in the hall every Tuesday.",
        "Snow dusted the hills north of the town.",
        "She folded the laundry while listening to the radio.",
        "The farmers market opens at dawn on Saturdays.",
        "A long freight train rolled past the station.",
        "The lecture covered the history of mapmaking.",
        "His umbrella turned inside out in the wind.",
        "The cafe introduced a new seasonal menu.",
        "Workers replaced the streetlights on Elm Avenue.",
        "The tide left smooth ripples in the sand.",
        "A bee drifted lazily between the rose bushes.",
        "The newspaper ran a feature on local bridges.",
        "They planted two maple trees by the school.",
        "The recipe calls for a pinch of nutmeg.",
        "An old map hung above the fireplace.",
        "The swimming pool reopens in early June.",
        "Her bicycle has a basket woven from willow.",
        "The hikers reached the summit before noon.",
        "A violin case leaned against the piano.",
        "The town council approved the new bus route.",
        "Leaves gathered in drifts along the curb.",
        "The bookstore hosts a reading every month.",
        "He sketched the skyline from the rooftop.",
        "The soup simmered slowly on the stove.",
        "A lighthouse blinked far across the bay.",
        "The tailor shortened the sleeves by an inch.",
        "Morning fog lifted from the meadow by ten.",
        "The students rehearsed their play in the gym.",
        "A jar of marbles sat on the top shelf.",
        "The carpenter sanded the table until it shone.",
        "Rain barrels collected water behind the shed.",
        "The festival featured kites of every color.",
        "She labeled each box before the move.",
        "The trail follows the creek for two miles.",
        "An accordion player performed near the fountain.",
        "The bakery sold out of rye bread by noon.",
        "He watered the ferns on the balcony.",
        "The clock tower chimes every quarter hour.",
        "A patch of clover grew beside the mailbox.",
        "The seamstress pinned the hem with care.",
        "Geese flew south in a ragged line.",
        "The grocer stacked oranges into a neat pyramid.",
        "Her scarf matched the color of the harbor.",
        "The printer hummed in the quiet office.",
        "A rowboat bobbed gently at the dock.",
        "The janitor waxed the corridor floors overnight.",
        "Wild blackberries ripened along the fence line.",
        "The conductor tapped the podium twice.",
        "A moth circled the porch light for hours.",
        "The gardener pruned the hedge into a neat wall.",
        "Fresh snow squeaked under their boots.",
        "The potter glazed the bowls a deep blue.",
        "A crossword puzzle lay half finished on the desk.",
        "The bus depot smelled faintly of diesel.",
        "She memorized the poem for Friday's class.",
        "The blacksmith demonstrated at the county fair.",
        "Clouds drifted slowly over the wheat fields.",
        "The plumber replaced a washer in the faucet.",
        "A chessboard waited by the window seat.",
        "The florist arranged tulips in a tall vase.",
        "He collected driftwood along the shoreline.",
        "The attic held trunks of winter clothes.",
        "A street sweeper passed before sunrise.",
        "The cartographer traced the river's course.",
        "Lanterns lined the path to the pavilion.",
        "The cobbler resoled the boots in a day.",
        "A gentle breeze stirred the curtains.",
        "The archivist catalogued letters from the estate.",
        "Two canoes glided across the still lake.",
        "The bell above the shop door jingled.",
        "She pressed wildflowers between heavy books.",
        "The miller ground the wheat into fine flour.",
        "A ladder leaned against the apple tree.",
        "The stationmaster checked his pocket watch.",
        "Frost etched patterns on the greenhouse glass.",
        "The tutor reviewed fractions with the twins.",
        "A picnic blanket covered the sunny slope.",
        "The glassblower shaped a slender vase.",
        "Pigeons gathered near the park benches.",
        "The innkeeper lit a fire in the parlor.",
        "A windmill turned slowly on the ridge.",
        "The courier delivered parcels before lunch.",
        "Her notebook filled with pressed leaves and notes.",
        "The harbor master logged each arriving boat.",
    };
    return pool;
}

// Loads a newline-delimited sentence file; blank lines are skipped.
inline std::vector<std::string> load_distractor_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open distractor file: " + path);
    std::vector<std::string> pool;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        pool.push_back(line);
    }
    if (pool.empty()) throw EmptyPoolError("distractor file has no sentences: " + path);
    return pool;
}

}  // namespace boxkey
